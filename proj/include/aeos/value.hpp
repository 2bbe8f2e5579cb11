// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "aeos/error.hpp"

namespace aeos {

enum class CodecErrc {
    NonFiniteReal,
    DepthExceeded,
    InvalidUtf8,
    ReservedKey,
    UnknownMsgType,
    PayloadTooLarge,
    BadMagic,
    UnsupportedVersion,
    IncompleteFrame,
    MalformedPayload,
};

const char* to_string(CodecErrc c) noexcept;

class CodecError : public Error {
public:
    CodecError(CodecErrc c, const std::string& detail = {})
        : Error(to_string(c), detail), errc_(c) {}
    CodecErrc errc() const noexcept { return errc_; }

private:
    CodecErrc errc_;
};

/// Maximum container nesting of a DataValue (a top-level record counts as 1).
inline constexpr int kMaxDepth = 32;

/// Reserved record key wrapping base64 text for the bytes variant.
inline constexpr std::string_view kBytesKey = "$bytes";

struct Bytes {
    std::vector<std::uint8_t> data;
    friend bool operator==(const Bytes&, const Bytes&) = default;
};

/// The universal tagged value moved between the core and its modules.
///
/// Records are keyed by UTF-8 text and kept sorted by byte value, which is
/// also the canonical wire order.
class Value {
public:
    using List = std::vector<Value>;
    using Record = std::map<std::string, Value>;

    enum class Kind { Null, Boolean, Integer, Real, Text, Bytes, List, Record };

    Value() = default;
    Value(std::nullptr_t) {}
    Value(bool b) : v_(b) {}
    Value(int i) : v_(std::int64_t{i}) {}
    Value(std::int64_t i) : v_(i) {}
    Value(std::uint64_t) = delete;
    Value(double d) : v_(d) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(std::string_view s) : v_(std::string(s)) {}
    Value(Bytes b) : v_(std::move(b)) {}
    Value(List l) : v_(std::move(l)) {}
    Value(Record r) : v_(std::move(r)) {}

    Kind kind() const noexcept { return static_cast<Kind>(v_.index()); }
    bool is_null() const noexcept { return kind() == Kind::Null; }
    bool is_bool() const noexcept { return kind() == Kind::Boolean; }
    bool is_int() const noexcept { return kind() == Kind::Integer; }
    bool is_real() const noexcept { return kind() == Kind::Real; }
    bool is_number() const noexcept { return is_int() || is_real(); }
    bool is_text() const noexcept { return kind() == Kind::Text; }
    bool is_bytes() const noexcept { return kind() == Kind::Bytes; }
    bool is_list() const noexcept { return kind() == Kind::List; }
    bool is_record() const noexcept { return kind() == Kind::Record; }

    // Checked accessors; throw aeos::Error("KindMismatch") on the wrong variant.
    bool as_bool() const;
    std::int64_t as_int() const;
    double as_real() const;
    /// Integer or real, widened to double.
    double as_number() const;
    const std::string& as_text() const;
    const Bytes& as_bytes() const;
    const List& as_list() const;
    List& as_list();
    const Record& as_record() const;
    Record& as_record();

    /// Record lookup; nullptr when this is not a record or the key is absent.
    const Value* find(std::string_view key) const;
    /// Record lookup that throws aeos::Error("MissingField") instead.
    const Value& at(std::string_view key) const;

    friend bool operator==(const Value&, const Value&) = default;

private:
    std::variant<std::monostate, bool, std::int64_t, double, std::string, Bytes, List, Record> v_;
};

const char* to_string(Value::Kind k) noexcept;

/// Container nesting depth: scalars and bytes are 0, a flat record is 1.
int depth_of(const Value& v);

/// Canonical JSON: keys sorted by byte value, no insignificant whitespace,
/// shortest round-tripping reals (always carrying a '.' or exponent so they
/// read back as reals), bytes as {"$bytes":"<base64>"}.
std::string canonical_encode(const Value& v);

/// Parses JSON text into a Value. Rejects duplicate keys, invalid UTF-8,
/// non-finite numbers, integers outside int64, misuse of "$bytes" and nesting
/// beyond kMaxDepth. Every failure is CodecError(MalformedPayload).
Value parse_json(std::string_view text);

std::string base64_encode(const std::vector<std::uint8_t>& data);
/// Strict: the input must be the canonical padded encoding of its octets.
bool base64_decode(std::string_view text, std::vector<std::uint8_t>& out);

bool is_valid_utf8(std::string_view s) noexcept;

/// Shortest decimal text that round-trips the binary64 value.
std::string format_real(double d);

/// Small builder for records in tests and tooling.
inline Value::Record make_record(std::initializer_list<std::pair<const std::string, Value>> kv) {
    return Value::Record(kv);
}

}  // namespace aeos
