// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeos/value.hpp"

namespace aeos {

/// A single schema problem. Rendered as "Code@path".
struct Violation {
    std::string code;
    std::string path;
    std::string detail;

    std::string to_string() const { return code + "@" + path; }
    Value to_value() const;
    static Violation from_value(const Value& v);
    friend bool operator==(const Violation&, const Violation&) = default;
};

using Violations = std::vector<Violation>;

Value to_value(const Violations& vs);

enum class ParamKind { Real, Integer, Boolean, Enum, Text, List };

const char* to_string(ParamKind k) noexcept;
std::optional<ParamKind> param_kind_from(std::string_view s) noexcept;

inline bool is_numeric(ParamKind k) noexcept { return k == ParamKind::Real || k == ParamKind::Integer; }

struct ParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::Real;
    std::optional<double> min;
    std::optional<double> max;
    std::vector<std::string> choices;
    std::string unit;
    std::optional<Value> default_value;
    std::optional<std::int64_t> grid_steps;

    Value to_value() const;
    friend bool operator==(const ParameterSpec&, const ParameterSpec&) = default;
};

enum class Role { Device, Analyzer, Planner };

const char* to_string(Role r) noexcept;
std::optional<Role> role_from(std::string_view s) noexcept;

struct CapabilitySchema {
    std::string name;
    Role role = Role::Device;
    std::vector<ParameterSpec> inputs;
    std::vector<ParameterSpec> outputs;
    std::int64_t default_timeout_ms = 5000;

    Value to_value() const;
    friend bool operator==(const CapabilitySchema&, const CapabilitySchema&) = default;
};

inline constexpr std::int64_t kMinHeartbeatMs = 100;
inline constexpr std::int64_t kMaxHeartbeatMs = 60000;

struct ModuleDescriptor {
    std::string module_name;
    std::string version;
    std::vector<CapabilitySchema> capabilities;
    std::int64_t heartbeat_interval_ms = 1000;

    const CapabilitySchema* find(std::string_view capability) const;
    Value to_value() const;
    friend bool operator==(const ModuleDescriptor&, const ModuleDescriptor&) = default;
};

// Structural parsing from DataValues. Shape problems are reported as
// violations (MissingField / WrongType / InvalidRole / InvalidKind) rather
// than thrown, so a REGISTER with a bad descriptor yields a complete list.
template <class T>
struct Parsed {
    std::optional<T> value;
    Violations violations;
};

Parsed<ParameterSpec> parse_parameter_spec(const Value& v, const std::string& path);
Parsed<ModuleDescriptor> parse_descriptor(const Value& v);

/// Semantic checks on a single spec (bounds, choices, default, name pattern).
Violations validate_parameter_spec(const ParameterSpec& spec, const std::string& path);
/// Empty iff every descriptor, capability and parameter invariant holds.
Violations validate_descriptor(const ModuleDescriptor& d);

bool is_identifier(std::string_view name) noexcept;

enum class CoercionErrc { OutOfBounds, KindMismatch, UnknownChoice, MissingRequired, UnknownField };

const char* to_string(CoercionErrc c) noexcept;

class CoercionError : public Error {
public:
    CoercionError(CoercionErrc c, std::string path, const std::string& detail)
        : Error(to_string(c), path + ": " + detail), errc_(c), path_(std::move(path)) {}
    CoercionErrc errc() const noexcept { return errc_; }
    const std::string& path() const noexcept { return path_; }

private:
    CoercionErrc errc_;
    std::string path_;
};

/// Checks `raw` against `spec`, widening integers for real kinds and
/// narrowing integral reals for integer kinds. A missing (nullptr) or null
/// value takes the parameter default when one exists.
Value coerce_value(const Value* raw, const ParameterSpec& spec);

/// Coerces every declared field. Undeclared fields are rejected with
/// UnknownField unless `allow_extra`, in which case they pass through.
Value::Record coerce_record(const Value::Record& raw, const std::vector<ParameterSpec>& specs, bool allow_extra);

}  // namespace aeos
