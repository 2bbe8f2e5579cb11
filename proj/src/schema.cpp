// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/schema.hpp"

#include <cmath>
#include <tuple>
#include <set>

namespace aeos {

Value Violation::to_value() const {
    return Value::Record{{"code", code}, {"path", path}, {"detail", detail}};
}

Violation Violation::from_value(const Value& v) {
    Violation out;
    if (const Value* c = v.find("code"); c && c->is_text()) out.code = c->as_text();
    if (const Value* p = v.find("path"); p && p->is_text()) out.path = p->as_text();
    if (const Value* d = v.find("detail"); d && d->is_text()) out.detail = d->as_text();
    return out;
}

Value to_value(const Violations& vs) {
    Value::List out;
    for (const auto& v : vs) out.push_back(v.to_value());
    return out;
}

const char* to_string(ParamKind k) noexcept {
    switch (k) {
    case ParamKind::Real: return "real";
    case ParamKind::Integer: return "integer";
    case ParamKind::Boolean: return "boolean";
    case ParamKind::Enum: return "enum";
    case ParamKind::Text: return "text";
    case ParamKind::List: return "list";
    }
    return "unknown";
}

std::optional<ParamKind> param_kind_from(std::string_view s) noexcept {
    for (auto k : {ParamKind::Real, ParamKind::Integer, ParamKind::Boolean, ParamKind::Enum, ParamKind::Text,
                   ParamKind::List})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

const char* to_string(Role r) noexcept {
    switch (r) {
    case Role::Device: return "device";
    case Role::Analyzer: return "analyzer";
    case Role::Planner: return "planner";
    }
    return "unknown";
}

std::optional<Role> role_from(std::string_view s) noexcept {
    for (auto r : {Role::Device, Role::Analyzer, Role::Planner})
        if (s == to_string(r)) return r;
    return std::nullopt;
}

const char* to_string(CoercionErrc c) noexcept {
    switch (c) {
    case CoercionErrc::OutOfBounds: return "OutOfBounds";
    case CoercionErrc::KindMismatch: return "KindMismatch";
    case CoercionErrc::UnknownChoice: return "UnknownChoice";
    case CoercionErrc::MissingRequired: return "MissingRequired";
    case CoercionErrc::UnknownField: return "UnknownField";
    }
    return "Unknown";
}

bool is_identifier(std::string_view name) noexcept {
    if (name.empty() || name.size() > 64) return false;
    if (name[0] < 'a' || name[0] > 'z') return false;
    for (char c : name.substr(1)) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

Value ParameterSpec::to_value() const {
    Value::Record r{{"name", name}, {"kind", to_string(kind)}};
    if (min) r.emplace("min", *min);
    if (max) r.emplace("max", *max);
    if (!choices.empty()) {
        Value::List l(choices.begin(), choices.end());
        r.emplace("choices", std::move(l));
    }
    if (!unit.empty()) r.emplace("unit", unit);
    if (default_value) r.emplace("default", *default_value);
    if (grid_steps) r.emplace("grid_steps", *grid_steps);
    return r;
}

Value CapabilitySchema::to_value() const {
    Value::List in, out;
    for (const auto& p : inputs) in.push_back(p.to_value());
    for (const auto& p : outputs) out.push_back(p.to_value());
    return Value::Record{{"name", name},
                         {"role", to_string(role)},
                         {"inputs", std::move(in)},
                         {"outputs", std::move(out)},
                         {"default_timeout_ms", default_timeout_ms}};
}

const CapabilitySchema* ModuleDescriptor::find(std::string_view capability) const {
    for (const auto& c : capabilities)
        if (c.name == capability) return &c;
    return nullptr;
}

Value ModuleDescriptor::to_value() const {
    Value::List caps;
    for (const auto& c : capabilities) caps.push_back(c.to_value());
    return Value::Record{{"module_name", module_name},
                         {"version", version},
                         {"capabilities", std::move(caps)},
                         {"heartbeat_interval_ms", heartbeat_interval_ms}};
}

namespace {

// Field reader that accumulates shape violations instead of throwing.
class FieldReader {
public:
    FieldReader(const Value& v, std::string path, Violations& out) : v_(v), path_(std::move(path)), out_(out) {
        if (!v.is_record()) report("WrongType", path_, "expected a record");
    }

    bool ok() const { return v_.is_record(); }

    const Value* get(const char* key, Value::Kind kind, bool required) {
        const Value* f = v_.find(key);
        if (!f || f->is_null()) {
            if (required && ok()) report("MissingField", sub(key), "required");
            return nullptr;
        }
        bool matches = f->kind() == kind || (kind == Value::Kind::Real && f->is_int());
        if (!matches) {
            report("WrongType", sub(key), std::string("expected ") + to_string(kind));
            return nullptr;
        }
        return f;
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void report(const char* code, std::string path, std::string detail) {
        out_.push_back({code, std::move(path), std::move(detail)});
    }

private:
    const Value& v_;
    std::string path_;
    Violations& out_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::optional<std::vector<ParameterSpec>> parse_spec_list(FieldReader& r, const char* key, Violations& out) {
    std::vector<ParameterSpec> specs;
    const Value* list = r.get(key, Value::Kind::List, false);
    if (!list) return specs;
    bool all_ok = true;
    for (std::size_t i = 0; i < list->as_list().size(); ++i) {
        auto p = parse_parameter_spec(list->as_list()[i], indexed(r.sub(key), i));
        out.insert(out.end(), p.violations.begin(), p.violations.end());
        if (p.value)
            specs.push_back(std::move(*p.value));
        else
            all_ok = false;
    }
    if (!all_ok) return std::nullopt;
    return specs;
}

}  // namespace

Parsed<ParameterSpec> parse_parameter_spec(const Value& v, const std::string& path) {
    Parsed<ParameterSpec> res;
    FieldReader r(v, path, res.violations);
    if (!r.ok()) return res;
    std::size_t before = res.violations.size();
    ParameterSpec s;
    if (const Value* f = r.get("name", Value::Kind::Text, true)) s.name = f->as_text();
    if (const Value* f = r.get("kind", Value::Kind::Text, true)) {
        if (auto k = param_kind_from(f->as_text()))
            s.kind = *k;
        else
            r.report("InvalidKind", r.sub("kind"), f->as_text());
    }
    if (const Value* f = r.get("min", Value::Kind::Real, false)) s.min = f->as_number();
    if (const Value* f = r.get("max", Value::Kind::Real, false)) s.max = f->as_number();
    if (const Value* f = r.get("choices", Value::Kind::List, false)) {
        for (std::size_t i = 0; i < f->as_list().size(); ++i) {
            const Value& c = f->as_list()[i];
            if (c.is_text())
                s.choices.push_back(c.as_text());
            else
                r.report("WrongType", indexed(r.sub("choices"), i), "expected text");
        }
    }
    if (const Value* f = r.get("unit", Value::Kind::Text, false)) s.unit = f->as_text();
    if (const Value* f = v.find("default"); f && !f->is_null()) s.default_value = *f;
    if (const Value* f = r.get("grid_steps", Value::Kind::Integer, false)) s.grid_steps = f->as_int();
    if (res.violations.size() == before) res.value = std::move(s);
    return res;
}

Parsed<ModuleDescriptor> parse_descriptor(const Value& v) {
    Parsed<ModuleDescriptor> res;
    FieldReader r(v, "", res.violations);
    if (!r.ok()) return res;
    std::size_t before = res.violations.size();
    ModuleDescriptor d;
    if (const Value* f = r.get("module_name", Value::Kind::Text, true)) d.module_name = f->as_text();
    if (const Value* f = r.get("version", Value::Kind::Text, true)) d.version = f->as_text();
    if (const Value* f = r.get("heartbeat_interval_ms", Value::Kind::Integer, true)) d.heartbeat_interval_ms = f->as_int();
    if (const Value* caps = r.get("capabilities", Value::Kind::List, true)) {
        for (std::size_t i = 0; i < caps->as_list().size(); ++i) {
            FieldReader cr(caps->as_list()[i], indexed("capabilities", i), res.violations);
            if (!cr.ok()) continue;
            CapabilitySchema c;
            if (const Value* f = cr.get("name", Value::Kind::Text, true)) c.name = f->as_text();
            if (const Value* f = cr.get("role", Value::Kind::Text, true)) {
                if (auto role = role_from(f->as_text()))
                    c.role = *role;
                else
                    cr.report("InvalidRole", cr.sub("role"), f->as_text());
            }
            if (const Value* f = cr.get("default_timeout_ms", Value::Kind::Integer, false)) c.default_timeout_ms = f->as_int();
            auto ins = parse_spec_list(cr, "inputs", res.violations);
            auto outs = parse_spec_list(cr, "outputs", res.violations);
            if (ins) c.inputs = std::move(*ins);
            if (outs) c.outputs = std::move(*outs);
            d.capabilities.push_back(std::move(c));
        }
    }
    if (res.violations.size() == before) res.value = std::move(d);
    return res;
}

Violations validate_parameter_spec(const ParameterSpec& s, const std::string& path) {
    Violations out;
    auto at = [&](const char* key) { return path + "." + key; };
    if (!is_identifier(s.name)) out.push_back({"InvalidName", at("name"), "must match ^[a-z][a-z0-9_]{0,63}$"});

    if (is_numeric(s.kind)) {
        if (s.min && s.max && *s.min > *s.max) out.push_back({"BoundsInverted", path, "min > max"});
        if (s.kind == ParamKind::Integer) {
            for (auto [b, key] : {std::pair{s.min, "min"}, std::pair{s.max, "max"}})
                if (b && std::floor(*b) != *b) out.push_back({"NonIntegralBound", at(key), "integer bound"});
        }
        if (s.grid_steps && *s.grid_steps < 1) out.push_back({"InvalidGridSteps", at("grid_steps"), "must be positive"});
    } else {
        if (s.min || s.max) out.push_back({"BoundsNotAllowed", path, "bounds apply to numeric kinds only"});
        if (s.grid_steps) out.push_back({"GridStepsNotAllowed", at("grid_steps"), "numeric kinds only"});
    }

    if (s.kind == ParamKind::Enum) {
        if (s.choices.empty()) out.push_back({"EmptyChoices", at("choices"), "enum needs at least one choice"});
        std::set<std::string> seen;
        for (const auto& c : s.choices)
            if (!seen.insert(c).second) out.push_back({"DuplicateChoice", at("choices"), c});
    } else if (!s.choices.empty()) {
        out.push_back({"ChoicesNotAllowed", at("choices"), "enum kind only"});
    }

    if (s.default_value) {
        ParameterSpec bare = s;
        bare.default_value.reset();
        try {
            coerce_value(&*s.default_value, bare);
        } catch (const CoercionError& e) {
            out.push_back({"DefaultOutOfRange", at("default"), e.detail()});
        }
    }
    return out;
}

Violations validate_descriptor(const ModuleDescriptor& d) {
    Violations out;
    if (d.module_name.empty()) out.push_back({"EmptyName", "module_name", "module_name is required"});
    if (d.capabilities.empty()) out.push_back({"NoCapabilities", "capabilities", "at least one capability"});

    std::set<std::string> names, reported;
    for (const auto& c : d.capabilities)
        if (!names.insert(c.name).second && reported.insert(c.name).second)
            out.push_back({"DuplicateCapability", "capabilities", c.name});

    for (std::size_t i = 0; i < d.capabilities.size(); ++i) {
        const auto& c = d.capabilities[i];
        std::string cpath = indexed("capabilities", i);
        if (c.name.empty()) out.push_back({"EmptyName", cpath + ".name", "capability name is required"});
        if (c.default_timeout_ms <= 0)
            out.push_back({"TimeoutOutOfRange", cpath + ".default_timeout_ms", "must be positive"});
        for (auto [list, key, code] : {std::tuple{&c.inputs, "inputs", "DuplicateInput"},
                                       std::tuple{&c.outputs, "outputs", "DuplicateOutput"}}) {
            std::set<std::string> seen;
            std::string lpath = cpath + "." + key;
            for (std::size_t j = 0; j < list->size(); ++j) {
                const auto& p = (*list)[j];
                if (!seen.insert(p.name).second) out.push_back({code, lpath, p.name});
                auto pv = validate_parameter_spec(p, indexed(lpath, j));
                out.insert(out.end(), pv.begin(), pv.end());
            }
        }
    }

    if (d.heartbeat_interval_ms < kMinHeartbeatMs || d.heartbeat_interval_ms > kMaxHeartbeatMs)
        out.push_back({"IntervalOutOfRange", "heartbeat_interval_ms",
                       "must lie in [" + std::to_string(kMinHeartbeatMs) + ", " + std::to_string(kMaxHeartbeatMs) + "]"});
    return out;
}

namespace {

void check_bounds(double v, const ParameterSpec& s) {
    if ((s.min && v < *s.min) || (s.max && v > *s.max)) {
        std::string range = "[" + (s.min ? format_real(*s.min) : std::string("-inf")) + ", " +
                            (s.max ? format_real(*s.max) : std::string("inf")) + "]";
        throw CoercionError(CoercionErrc::OutOfBounds, s.name, format_real(v) + " outside " + range);
    }
}

[[noreturn]] void kind_mismatch(const ParameterSpec& s, const Value& v) {
    throw CoercionError(CoercionErrc::KindMismatch, s.name,
                        std::string("expected ") + to_string(s.kind) + ", got " + to_string(v.kind()));
}

}  // namespace

Value coerce_value(const Value* raw, const ParameterSpec& s) {
    if (!raw || raw->is_null()) {
        if (s.default_value) return *s.default_value;
        throw CoercionError(CoercionErrc::MissingRequired, s.name, "no value and no default");
    }
    const Value& v = *raw;
    switch (s.kind) {
    case ParamKind::Real: {
        if (!v.is_number()) kind_mismatch(s, v);
        double d = v.as_number();
        if (!std::isfinite(d)) kind_mismatch(s, v);
        check_bounds(d, s);
        return Value{d};
    }
    case ParamKind::Integer: {
        std::int64_t i;
        if (v.is_int()) {
            i = v.as_int();
        } else if (v.is_real()) {
            double d = v.as_real();
            // 2^63 is exactly representable; anything at or above it overflows
            if (std::floor(d) != d || d < -9223372036854775808.0 || d >= 9223372036854775808.0) kind_mismatch(s, v);
            i = static_cast<std::int64_t>(d);
        } else {
            kind_mismatch(s, v);
        }
        check_bounds(static_cast<double>(i), s);
        return Value{i};
    }
    case ParamKind::Boolean:
        if (!v.is_bool()) kind_mismatch(s, v);
        return v;
    case ParamKind::Enum:
        if (!v.is_text()) kind_mismatch(s, v);
        for (const auto& c : s.choices)
            if (c == v.as_text()) return v;
        throw CoercionError(CoercionErrc::UnknownChoice, s.name, "\"" + v.as_text() + "\" is not a declared choice");
    case ParamKind::Text:
        if (!v.is_text()) kind_mismatch(s, v);
        return v;
    case ParamKind::List:
        if (!v.is_list()) kind_mismatch(s, v);
        return v;
    }
    kind_mismatch(s, v);
}

Value::Record coerce_record(const Value::Record& raw, const std::vector<ParameterSpec>& specs, bool allow_extra) {
    Value::Record out;
    for (const auto& s : specs) {
        auto it = raw.find(s.name);
        out.emplace(s.name, coerce_value(it == raw.end() ? nullptr : &it->second, s));
    }
    for (const auto& [k, v] : raw) {
        if (out.count(k)) continue;
        if (!allow_extra) throw CoercionError(CoercionErrc::UnknownField, k, "not declared by the capability");
        out.emplace(k, v);
    }
    return out;
}

}  // namespace aeos
