// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Framed module protocol.
//
// Every frame is an 11-octet header followed by a canonical-JSON payload:
//
//   "AEP1" | version (1) | msg_type (LE16) | payload_len (LE32) | payload
//
// The payload is always a JSON object. Frames are self-delimiting so a
// stream reader can call decode_frame repeatedly on its receive buffer.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aeos/value.hpp"

namespace aeos {

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{0x41, 0x45, 0x50, 0x31};
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 11;
inline constexpr std::uint32_t kMaxPayload = 16u * 1024u * 1024u;
inline constexpr std::uint16_t kDefaultModulePort = 7410;

enum class MsgType : std::uint16_t {
    Register = 1,
    RegisterAck = 2,
    Heartbeat = 3,
    HeartbeatAck = 4,
    ExecuteRequest = 5,
    ExecuteResult = 6,
    ExecuteError = 7,
    Shutdown = 8,
};

const char* to_string(MsgType t) noexcept;
bool is_known_msg_type(std::uint16_t raw) noexcept;

using Octets = std::vector<std::uint8_t>;

struct DecodedFrame {
    MsgType type;
    Value::Record payload;
    /// Octets following this frame, untouched.
    std::span<const std::uint8_t> rest;
    std::size_t consumed = 0;
};

Octets encode_frame(MsgType type, const Value::Record& payload);
/// Unchecked raw type, for producing deliberately bad frames.
Octets encode_frame(std::uint16_t raw_type, const Value::Record& payload);

/// Parses exactly one frame from the front of `octets`.
/// Throws CodecError: BadMagic, UnsupportedVersion, UnknownMsgType,
/// PayloadTooLarge, IncompleteFrame (more octets needed) or MalformedPayload.
DecodedFrame decode_frame(std::span<const std::uint8_t> octets);

// Typed payloads.

struct RegisterMsg {
    /// Raw descriptor; validated by the registry so violations can be reported.
    Value descriptor;
    friend bool operator==(const RegisterMsg&, const RegisterMsg&) = default;
};

struct RegisterAckMsg {
    std::string module_id;
    bool ok = false;
    /// Records of {code, path, detail}.
    Value::List violations;
    friend bool operator==(const RegisterAckMsg&, const RegisterAckMsg&) = default;
};

struct HeartbeatMsg {
    std::string module_id;
    std::string status;
    friend bool operator==(const HeartbeatMsg&, const HeartbeatMsg&) = default;
};

struct HeartbeatAckMsg {
    friend bool operator==(const HeartbeatAckMsg&, const HeartbeatAckMsg&) = default;
};

struct ExecuteRequestMsg {
    std::int64_t request_id = 0;
    std::string capability;
    Value::Record inputs;
    friend bool operator==(const ExecuteRequestMsg&, const ExecuteRequestMsg&) = default;
};

struct ExecuteResultMsg {
    std::int64_t request_id = 0;
    Value::Record outputs;
    std::int64_t elapsed_ms = 0;
    friend bool operator==(const ExecuteResultMsg&, const ExecuteResultMsg&) = default;
};

struct ExecuteErrorMsg {
    std::int64_t request_id = 0;
    std::string code;
    std::string detail;
    friend bool operator==(const ExecuteErrorMsg&, const ExecuteErrorMsg&) = default;
};

struct ShutdownMsg {
    std::string reason;
    friend bool operator==(const ShutdownMsg&, const ShutdownMsg&) = default;
};

using Message = std::variant<RegisterMsg, RegisterAckMsg, HeartbeatMsg, HeartbeatAckMsg, ExecuteRequestMsg,
                             ExecuteResultMsg, ExecuteErrorMsg, ShutdownMsg>;

MsgType type_of(const Message& m) noexcept;
Value::Record to_payload(const Message& m);
/// Throws CodecError(MalformedPayload) when the payload does not fit the type.
Message message_from(MsgType type, const Value::Record& payload);

Octets encode_message(const Message& m);

struct DecodedMessage {
    Message message;
    std::size_t consumed = 0;
};

DecodedMessage decode_message(std::span<const std::uint8_t> octets);

}  // namespace aeos
