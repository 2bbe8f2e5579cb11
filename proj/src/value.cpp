// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/value.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace aeos {

const char* to_string(CodecErrc c) noexcept {
    switch (c) {
    case CodecErrc::NonFiniteReal: return "NonFiniteReal";
    case CodecErrc::DepthExceeded: return "DepthExceeded";
    case CodecErrc::InvalidUtf8: return "InvalidUtf8";
    case CodecErrc::ReservedKey: return "ReservedKey";
    case CodecErrc::UnknownMsgType: return "UnknownMsgType";
    case CodecErrc::PayloadTooLarge: return "PayloadTooLarge";
    case CodecErrc::BadMagic: return "BadMagic";
    case CodecErrc::UnsupportedVersion: return "UnsupportedVersion";
    case CodecErrc::IncompleteFrame: return "IncompleteFrame";
    case CodecErrc::MalformedPayload: return "MalformedPayload";
    }
    return "Unknown";
}

const char* to_string(Value::Kind k) noexcept {
    switch (k) {
    case Value::Kind::Null: return "null";
    case Value::Kind::Boolean: return "boolean";
    case Value::Kind::Integer: return "integer";
    case Value::Kind::Real: return "real";
    case Value::Kind::Text: return "text";
    case Value::Kind::Bytes: return "bytes";
    case Value::Kind::List: return "list";
    case Value::Kind::Record: return "record";
    }
    return "unknown";
}

namespace {

[[noreturn]] void mismatch(Value::Kind want, Value::Kind got) {
    throw Error("KindMismatch", std::string("expected ") + to_string(want) + ", got " + to_string(got));
}

}  // namespace

bool Value::as_bool() const {
    if (!is_bool()) mismatch(Kind::Boolean, kind());
    return std::get<bool>(v_);
}

std::int64_t Value::as_int() const {
    if (!is_int()) mismatch(Kind::Integer, kind());
    return std::get<std::int64_t>(v_);
}

double Value::as_real() const {
    if (!is_real()) mismatch(Kind::Real, kind());
    return std::get<double>(v_);
}

double Value::as_number() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
    if (!is_real()) mismatch(Kind::Real, kind());
    return std::get<double>(v_);
}

const std::string& Value::as_text() const {
    if (!is_text()) mismatch(Kind::Text, kind());
    return std::get<std::string>(v_);
}

const Bytes& Value::as_bytes() const {
    if (!is_bytes()) mismatch(Kind::Bytes, kind());
    return std::get<Bytes>(v_);
}

const Value::List& Value::as_list() const {
    if (!is_list()) mismatch(Kind::List, kind());
    return std::get<List>(v_);
}

Value::List& Value::as_list() {
    if (!is_list()) mismatch(Kind::List, kind());
    return std::get<List>(v_);
}

const Value::Record& Value::as_record() const {
    if (!is_record()) mismatch(Kind::Record, kind());
    return std::get<Record>(v_);
}

Value::Record& Value::as_record() {
    if (!is_record()) mismatch(Kind::Record, kind());
    return std::get<Record>(v_);
}

const Value* Value::find(std::string_view key) const {
    if (!is_record()) return nullptr;
    const auto& r = std::get<Record>(v_);
    auto it = r.find(std::string(key));
    return it == r.end() ? nullptr : &it->second;
}

const Value& Value::at(std::string_view key) const {
    if (const Value* v = find(key)) return *v;
    throw Error("MissingField", std::string(key));
}

int depth_of(const Value& v) {
    int inner = 0;
    if (v.is_list()) {
        for (const auto& e : v.as_list()) inner = std::max(inner, depth_of(e));
        return inner + 1;
    }
    if (v.is_record()) {
        for (const auto& [k, e] : v.as_record()) inner = std::max(inner, depth_of(e));
        return inner + 1;
    }
    return 0;
}

bool is_valid_utf8(std::string_view s) noexcept {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const auto* end = p + s.size();
    while (p < end) {
        unsigned char c = *p;
        if (c < 0x80) {
            ++p;
            continue;
        }
        int len;
        std::uint32_t cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (end - p < len) return false;
        for (int i = 1; i < len; ++i) {
            if ((p[i] & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (p[i] & 0x3F);
        }
        // overlong forms, surrogates, beyond U+10FFFF
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        p += len;
    }
    return true;
}

std::string format_real(double d) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string out(buf, ptr);
    if (out.find_first_of(".e") == std::string::npos) out += ".0";
    return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    if (data.empty()) return out;
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

bool base64_decode(std::string_view text, std::vector<std::uint8_t>& out) {
    out.clear();
    if (text.empty()) return true;
    if (text.size() % 4 != 0) return false;
    std::vector<std::uint8_t> buf(text.size() / 4 * 3);
    int n = EVP_DecodeBlock(buf.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) return false;
    std::size_t pad = 0;
    if (text.back() == '=') ++pad;
    if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
    buf.resize(static_cast<std::size_t>(n) - pad);
    // EVP_DecodeBlock tolerates whitespace and non-zero trailing bits; only the
    // canonical spelling is accepted.
    if (base64_encode(buf) != text) return false;
    out = std::move(buf);
    return true;
}

namespace {

void encode_text(std::string& out, const std::string& s) {
    if (!is_valid_utf8(s)) throw CodecError(CodecErrc::InvalidUtf8);
    static constexpr char hex[] = "0123456789abcdef";
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\b': out += "\\b"; break;
        case '\f': out += "\\f"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20) {
                out += "\\u00";
                out += hex[c >> 4];
                out += hex[c & 0xF];
            } else {
                out += static_cast<char>(c);
            }
        }
    }
    out += '"';
}

void encode_into(std::string& out, const Value& v, int depth) {
    switch (v.kind()) {
    case Value::Kind::Null: out += "null"; return;
    case Value::Kind::Boolean: out += v.as_bool() ? "true" : "false"; return;
    case Value::Kind::Integer: out += std::to_string(v.as_int()); return;
    case Value::Kind::Real: {
        double d = v.as_real();
        if (!std::isfinite(d)) throw CodecError(CodecErrc::NonFiniteReal);
        out += format_real(d);
        return;
    }
    case Value::Kind::Text: encode_text(out, v.as_text()); return;
    case Value::Kind::Bytes:
        out += "{\"$bytes\":\"";
        out += base64_encode(v.as_bytes().data);
        out += "\"}";
        return;
    case Value::Kind::List: {
        if (depth + 1 > kMaxDepth) throw CodecError(CodecErrc::DepthExceeded);
        out += '[';
        bool first = true;
        for (const auto& e : v.as_list()) {
            if (!first) out += ',';
            first = false;
            encode_into(out, e, depth + 1);
        }
        out += ']';
        return;
    }
    case Value::Kind::Record: {
        if (depth + 1 > kMaxDepth) throw CodecError(CodecErrc::DepthExceeded);
        out += '{';
        bool first = true;
        for (const auto& [k, e] : v.as_record()) {
            if (k == kBytesKey) throw CodecError(CodecErrc::ReservedKey, "record key \"$bytes\" is reserved");
            if (!first) out += ',';
            first = false;
            encode_text(out, k);
            out += ':';
            encode_into(out, e, depth + 1);
        }
        out += '}';
        return;
    }
    }
}

// Builds Values straight from nlohmann's SAX events so duplicate keys and
// nesting can be rejected while parsing.
class ValueBuilder {
public:
    using json = nlohmann::json;
    using number_integer_t = json::number_integer_t;
    using number_unsigned_t = json::number_unsigned_t;
    using number_float_t = json::number_float_t;
    using string_t = json::string_t;
    using binary_t = json::binary_t;

    bool null() { return put(Value{}); }
    bool boolean(bool b) { return put(Value{b}); }
    bool number_integer(number_integer_t i) { return put(Value{static_cast<std::int64_t>(i)}); }
    bool number_unsigned(number_unsigned_t u) {
        if (u > static_cast<number_unsigned_t>(std::numeric_limits<std::int64_t>::max()))
            return fail("integer exceeds signed 64-bit range");
        return put(Value{static_cast<std::int64_t>(u)});
    }
    bool number_float(number_float_t d, const string_t& text) {
        // The parser falls back to a double for integer literals beyond uint64.
        if (text.find_first_of(".eE") == string_t::npos) return fail("integer exceeds signed 64-bit range");
        if (!std::isfinite(d)) return fail("non-finite real");
        return put(Value{d});
    }
    bool string(string_t& s) { return put(Value{std::move(s)}); }
    bool binary(binary_t&) { return fail("binary not supported"); }

    bool start_object(std::size_t) { return open(Value{Value::Record{}}); }
    bool key(string_t& k) {
        auto& rec = stack_.back().value.as_record();
        if (rec.count(k)) return fail("duplicate key \"" + k + "\"");
        stack_.back().key = std::move(k);
        return true;
    }
    bool end_object() {
        Frame f = std::move(stack_.back());
        stack_.pop_back();
        auto& rec = f.value.as_record();
        if (auto it = rec.find(std::string(kBytesKey)); it != rec.end()) {
            if (rec.size() != 1 || !it->second.is_text()) return fail("malformed $bytes wrapper");
            Bytes b;
            if (!base64_decode(it->second.as_text(), b.data)) return fail("invalid base64 in $bytes");
            return put(Value{std::move(b)});
        }
        return put(std::move(f.value));
    }
    bool start_array(std::size_t) { return open(Value{Value::List{}}); }
    bool end_array() {
        Frame f = std::move(stack_.back());
        stack_.pop_back();
        return put(std::move(f.value));
    }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) {
        return fail("at byte " + std::to_string(pos) + ": " + ex.what());
    }

    Value take() { return std::move(root_); }
    const std::string& error() const { return error_; }

private:
    struct Frame {
        Value value;
        std::string key;
    };

    bool open(Value container) {
        // +1 leaves room for a $bytes wrapper at the innermost level
        if (static_cast<int>(stack_.size()) >= kMaxDepth + 1) return fail("nesting too deep");
        stack_.push_back(Frame{std::move(container), {}});
        return true;
    }

    bool put(Value v) {
        if (stack_.empty()) {
            root_ = std::move(v);
            return true;
        }
        auto& top = stack_.back();
        if (top.value.is_list()) {
            top.value.as_list().push_back(std::move(v));
        } else {
            top.value.as_record().emplace(std::move(top.key), std::move(v));
            top.key.clear();
        }
        return true;
    }

    bool fail(std::string msg) {
        if (error_.empty()) error_ = std::move(msg);
        return false;
    }

    std::vector<Frame> stack_;
    Value root_;
    std::string error_;
};

}  // namespace

std::string canonical_encode(const Value& v) {
    std::string out;
    encode_into(out, v, 0);
    return out;
}

Value parse_json(std::string_view text) {
    ValueBuilder builder;
    bool ok = false;
    try {
        ok = nlohmann::json::sax_parse(text.begin(), text.end(), &builder);
    } catch (const nlohmann::json::exception& e) {
        throw CodecError(CodecErrc::MalformedPayload, e.what());
    }
    if (!ok) throw CodecError(CodecErrc::MalformedPayload, builder.error());
    Value v = builder.take();
    if (depth_of(v) > kMaxDepth) throw CodecError(CodecErrc::MalformedPayload, "nesting too deep");
    return v;
}

}  // namespace aeos
