// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/protocol.hpp"

#include <algorithm>

namespace aeos {

const char* to_string(MsgType t) noexcept {
    switch (t) {
    case MsgType::Register: return "REGISTER";
    case MsgType::RegisterAck: return "REGISTER_ACK";
    case MsgType::Heartbeat: return "HEARTBEAT";
    case MsgType::HeartbeatAck: return "HEARTBEAT_ACK";
    case MsgType::ExecuteRequest: return "EXECUTE_REQUEST";
    case MsgType::ExecuteResult: return "EXECUTE_RESULT";
    case MsgType::ExecuteError: return "EXECUTE_ERROR";
    case MsgType::Shutdown: return "SHUTDOWN";
    }
    return "UNKNOWN";
}

bool is_known_msg_type(std::uint16_t raw) noexcept { return raw >= 1 && raw <= 8; }

Octets encode_frame(std::uint16_t raw_type, const Value::Record& payload) {
    std::string body = canonical_encode(Value{payload});
    if (body.size() > kMaxPayload) throw CodecError(CodecErrc::PayloadTooLarge, std::to_string(body.size()) + " octets");
    auto len = static_cast<std::uint32_t>(body.size());
    Octets out(kFrameHeaderSize + body.size());
    std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
    out[4] = kProtocolVersion;
    out[5] = static_cast<std::uint8_t>(raw_type & 0xFF);
    out[6] = static_cast<std::uint8_t>(raw_type >> 8);
    for (int i = 0; i < 4; ++i) out[7 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    std::copy(body.begin(), body.end(), out.begin() + kFrameHeaderSize);
    return out;
}

Octets encode_frame(MsgType type, const Value::Record& payload) {
    auto raw = static_cast<std::uint16_t>(type);
    if (!is_known_msg_type(raw)) throw CodecError(CodecErrc::UnknownMsgType, std::to_string(raw));
    return encode_frame(raw, payload);
}

DecodedFrame decode_frame(std::span<const std::uint8_t> in) {
    std::size_t magic_n = std::min(in.size(), kFrameMagic.size());
    if (!std::equal(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(magic_n), kFrameMagic.begin()))
        throw CodecError(CodecErrc::BadMagic);
    if (in.size() < 5) throw CodecError(CodecErrc::IncompleteFrame, "header");
    if (in[4] != kProtocolVersion) throw CodecError(CodecErrc::UnsupportedVersion, std::to_string(in[4]));
    if (in.size() < 7) throw CodecError(CodecErrc::IncompleteFrame, "header");
    auto raw_type = static_cast<std::uint16_t>(in[5] | (in[6] << 8));
    if (!is_known_msg_type(raw_type)) throw CodecError(CodecErrc::UnknownMsgType, std::to_string(raw_type));
    if (in.size() < kFrameHeaderSize) throw CodecError(CodecErrc::IncompleteFrame, "header");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(in[7 + i]) << (8 * i);
    if (len > kMaxPayload) throw CodecError(CodecErrc::PayloadTooLarge, std::to_string(len) + " octets");
    if (in.size() - kFrameHeaderSize < len)
        throw CodecError(CodecErrc::IncompleteFrame,
                         "need " + std::to_string(len) + " payload octets, have " +
                             std::to_string(in.size() - kFrameHeaderSize));

    std::string_view text(reinterpret_cast<const char*>(in.data() + kFrameHeaderSize), len);
    Value v = parse_json(text);
    if (!v.is_record()) throw CodecError(CodecErrc::MalformedPayload, "payload is not an object");

    DecodedFrame out{static_cast<MsgType>(raw_type), std::move(v.as_record()), {}, kFrameHeaderSize + len};
    out.rest = in.subspan(out.consumed);
    return out;
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw CodecError(CodecErrc::MalformedPayload, what); }

const Value& field(const Value::Record& p, const char* key) {
    auto it = p.find(key);
    if (it == p.end()) malformed(std::string("missing field ") + key);
    return it->second;
}

std::string text_field(const Value::Record& p, const char* key) {
    const Value& v = field(p, key);
    if (!v.is_text()) malformed(std::string(key) + " must be text");
    return v.as_text();
}

std::int64_t int_field(const Value::Record& p, const char* key) {
    const Value& v = field(p, key);
    if (!v.is_int()) malformed(std::string(key) + " must be an integer");
    return v.as_int();
}

Value::Record record_field(const Value::Record& p, const char* key) {
    const Value& v = field(p, key);
    if (!v.is_record()) malformed(std::string(key) + " must be a record");
    return v.as_record();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

MsgType type_of(const Message& m) noexcept {
    return static_cast<MsgType>(m.index() + 1);
}

Value::Record to_payload(const Message& m) {
    return std::visit(
        overloaded{
            [](const RegisterMsg& r) { return Value::Record{{"descriptor", r.descriptor}}; },
            [](const RegisterAckMsg& r) {
                Value::Record p{{"module_id", r.module_id}, {"ok", r.ok}};
                if (!r.violations.empty()) p.emplace("violations", r.violations);
                return p;
            },
            [](const HeartbeatMsg& r) { return Value::Record{{"module_id", r.module_id}, {"status", r.status}}; },
            [](const HeartbeatAckMsg&) { return Value::Record{}; },
            [](const ExecuteRequestMsg& r) {
                return Value::Record{
                    {"request_id", r.request_id}, {"capability", r.capability}, {"inputs", r.inputs}};
            },
            [](const ExecuteResultMsg& r) {
                return Value::Record{
                    {"request_id", r.request_id}, {"outputs", r.outputs}, {"elapsed_ms", r.elapsed_ms}};
            },
            [](const ExecuteErrorMsg& r) {
                return Value::Record{{"request_id", r.request_id}, {"code", r.code}, {"detail", r.detail}};
            },
            [](const ShutdownMsg& r) { return Value::Record{{"reason", r.reason}}; },
        },
        m);
}

Message message_from(MsgType type, const Value::Record& p) {
    switch (type) {
    case MsgType::Register: return RegisterMsg{field(p, "descriptor")};
    case MsgType::RegisterAck: {
        RegisterAckMsg m;
        m.module_id = text_field(p, "module_id");
        const Value& ok = field(p, "ok");
        if (!ok.is_bool()) malformed("ok must be a boolean");
        m.ok = ok.as_bool();
        if (auto it = p.find("violations"); it != p.end()) {
            if (!it->second.is_list()) malformed("violations must be a list");
            m.violations = it->second.as_list();
        }
        return m;
    }
    case MsgType::Heartbeat: return HeartbeatMsg{text_field(p, "module_id"), text_field(p, "status")};
    case MsgType::HeartbeatAck: return HeartbeatAckMsg{};
    case MsgType::ExecuteRequest:
        return ExecuteRequestMsg{int_field(p, "request_id"), text_field(p, "capability"), record_field(p, "inputs")};
    case MsgType::ExecuteResult:
        return ExecuteResultMsg{int_field(p, "request_id"), record_field(p, "outputs"), int_field(p, "elapsed_ms")};
    case MsgType::ExecuteError:
        return ExecuteErrorMsg{int_field(p, "request_id"), text_field(p, "code"), text_field(p, "detail")};
    case MsgType::Shutdown: return ShutdownMsg{text_field(p, "reason")};
    }
    throw CodecError(CodecErrc::UnknownMsgType);
}

Octets encode_message(const Message& m) { return encode_frame(type_of(m), to_payload(m)); }

DecodedMessage decode_message(std::span<const std::uint8_t> octets) {
    DecodedFrame f = decode_frame(octets);
    return {message_from(f.type, f.payload), f.consumed};
}

}  // namespace aeos
