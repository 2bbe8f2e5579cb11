// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace aeos {

//---------------------------------------------------------------------------//
// Names
//---------------------------------------------------------------------------//

const char* to_string(ExperimentStatus s) noexcept {
    switch (s) {
    case ExperimentStatus::Planned: return "PLANNED";
    case ExperimentStatus::Running: return "RUNNING";
    case ExperimentStatus::Done: return "DONE";
    case ExperimentStatus::Failed: return "FAILED";
    case ExperimentStatus::Skipped: return "SKIPPED";
    }
    return "UNKNOWN";
}

const char* to_string(CampaignStatus s) noexcept {
    switch (s) {
    case CampaignStatus::Draft: return "DRAFT";
    case CampaignStatus::Running: return "RUNNING";
    case CampaignStatus::Paused: return "PAUSED";
    case CampaignStatus::Completed: return "COMPLETED";
    case CampaignStatus::Aborted: return "ABORTED";
    case CampaignStatus::Failed: return "FAILED";
    }
    return "UNKNOWN";
}

const char* to_string(StopReason r) noexcept {
    switch (r) {
    case StopReason::BudgetExhausted: return "BudgetExhausted";
    case StopReason::TargetReached: return "TargetReached";
    case StopReason::WallClockExceeded: return "WallClockExceeded";
    case StopReason::PlannerExhausted: return "PlannerExhausted";
    case StopReason::Aborted: return "Aborted";
    case StopReason::FatalError: return "FatalError";
    }
    return "Unknown";
}

const char* to_string(ControlAction a) noexcept {
    switch (a) {
    case ControlAction::Start: return "start";
    case ControlAction::Pause: return "pause";
    case ControlAction::Resume: return "resume";
    case ControlAction::Abort: return "abort";
    }
    return "unknown";
}

const char* to_string(CampaignErrc c) noexcept {
    switch (c) {
    case CampaignErrc::InvalidTransition: return "InvalidTransition";
    case CampaignErrc::ValidationFailed: return "ValidationFailed";
    case CampaignErrc::UnknownCampaign: return "UnknownCampaign";
    case CampaignErrc::NotRunning: return "NotRunning";
    }
    return "Unknown";
}

namespace {

template <class E, std::size_t N>
std::optional<E> lookup_name(std::string_view s, const E (&all)[N]) {
    for (E e : all)
        if (s == to_string(e)) return e;
    return std::nullopt;
}

}  // namespace

std::optional<ExperimentStatus> experiment_status_from(std::string_view s) noexcept {
    static constexpr ExperimentStatus all[] = {ExperimentStatus::Planned, ExperimentStatus::Running,
                                               ExperimentStatus::Done, ExperimentStatus::Failed,
                                               ExperimentStatus::Skipped};
    return lookup_name(s, all);
}

std::optional<CampaignStatus> campaign_status_from(std::string_view s) noexcept {
    static constexpr CampaignStatus all[] = {CampaignStatus::Draft,     CampaignStatus::Running,
                                             CampaignStatus::Paused,    CampaignStatus::Completed,
                                             CampaignStatus::Aborted,   CampaignStatus::Failed};
    return lookup_name(s, all);
}

std::optional<StopReason> stop_reason_from(std::string_view s) noexcept {
    static constexpr StopReason all[] = {StopReason::BudgetExhausted,   StopReason::TargetReached,
                                         StopReason::WallClockExceeded, StopReason::PlannerExhausted,
                                         StopReason::Aborted,           StopReason::FatalError};
    return lookup_name(s, all);
}

std::optional<ControlAction> control_action_from(std::string_view s) noexcept {
    static constexpr ControlAction all[] = {ControlAction::Start, ControlAction::Pause, ControlAction::Resume,
                                            ControlAction::Abort};
    return lookup_name(s, all);
}

//---------------------------------------------------------------------------//
// Spec <-> Value
//---------------------------------------------------------------------------//

Value Binding::to_value() const {
    switch (kind) {
    case Kind::Literal: return Value::Record{{"literal", literal}};
    case Kind::FromPlan: return Value::Record{{"plan", dimension}};
    case Kind::FromStep: return Value::Record{{"step", step}, {"field", field}};
    }
    return {};
}

Value StepTemplate::to_value() const {
    Value::Record in;
    for (const auto& [k, b] : inputs) in.emplace(k, b.to_value());
    return Value::Record{{"name", name}, {"capability", capability}, {"role", to_string(role)}, {"inputs", std::move(in)}};
}

std::string PlannerConfig::name() const {
    switch (kind) {
    case Kind::Grid: return "grid";
    case Kind::Random: return "random";
    case Kind::EpsilonGreedy: return "epsilon_greedy";
    case Kind::External: return "external:" + capability;
    }
    return "unknown";
}

Value PlannerConfig::to_value() const {
    auto seed_v = static_cast<std::int64_t>(seed);
    switch (kind) {
    case Kind::Grid: return Value::Record{{"kind", "grid"}};
    case Kind::Random: return Value::Record{{"kind", "random"}, {"seed", seed_v}};
    case Kind::EpsilonGreedy:
        return Value::Record{{"kind", "epsilon_greedy"}, {"seed", seed_v}, {"epsilon", epsilon}};
    case Kind::External:
        return Value::Record{{"kind", "external"}, {"capability", capability}, {"seed", seed_v}, {"epsilon", epsilon}};
    }
    return {};
}

const StepTemplate* CampaignSpec::find_step(std::string_view n) const {
    for (const auto& s : steps)
        if (s.name == n) return &s;
    return nullptr;
}

Value CampaignSpec::to_value() const {
    Value::List dims, st;
    for (const auto& d : space) dims.push_back(d.to_value());
    for (const auto& s : steps) st.push_back(s.to_value());
    Value::Record stop_v;
    if (stop.max_experiments) stop_v.emplace("max_experiments", *stop.max_experiments);
    if (stop.target_value) stop_v.emplace("target_value", *stop.target_value);
    if (stop.max_wall_ms) stop_v.emplace("max_wall_ms", *stop.max_wall_ms);
    Value::Record policy{{"kind", error_policy.kind == ErrorPolicy::Kind::Abort  ? "abort"
                                  : error_policy.kind == ErrorPolicy::Kind::Skip ? "skip"
                                                                                 : "retry"}};
    if (error_policy.kind == ErrorPolicy::Kind::Retry) policy.emplace("n", error_policy.retries);
    return Value::Record{
        {"campaign_id", campaign_id},
        {"name", name},
        {"space", std::move(dims)},
        {"steps", std::move(st)},
        {"planner", planner.to_value()},
        {"objective",
         Value::Record{{"step", objective.step}, {"field", objective.field}, {"direction", to_string(objective.direction)}}},
        {"stop", std::move(stop_v)},
        {"error_policy", std::move(policy)},
    };
}

namespace {

class SpecReader {
public:
    explicit SpecReader(Violations& out) : out_(out) {}

    const Value* get(const Value& rec, const std::string& path, const char* key, Value::Kind kind, bool required) {
        std::string p = path.empty() ? key : path + "." + key;
        const Value* f = rec.find(key);
        if (!f || f->is_null()) {
            if (required) out_.push_back({"MissingField", p, "required"});
            return nullptr;
        }
        bool ok = f->kind() == kind || (kind == Value::Kind::Real && f->is_int());
        if (!ok) {
            out_.push_back({"WrongType", p, std::string("expected ") + to_string(kind)});
            return nullptr;
        }
        return f;
    }

    void report(std::string code, std::string path, std::string detail) {
        out_.push_back({std::move(code), std::move(path), std::move(detail)});
    }

private:
    Violations& out_;
};

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::optional<Binding> parse_binding(const Value& v, const std::string& path, SpecReader& r) {
    if (!v.is_record()) {
        r.report("WrongType", path, "binding must be a record");
        return std::nullopt;
    }
    if (const Value* lit = v.find("literal")) return Binding::lit(*lit);
    if (const Value* p = r.get(v, path, "plan", Value::Kind::Text, false)) return Binding::plan(p->as_text());
    if (v.find("step")) {
        const Value* s = r.get(v, path, "step", Value::Kind::Text, true);
        const Value* f = r.get(v, path, "field", Value::Kind::Text, true);
        if (s && f) return Binding::from_step(s->as_text(), f->as_text());
        return std::nullopt;
    }
    r.report("InvalidBinding", path, "expected one of literal, plan, step");
    return std::nullopt;
}

}  // namespace

Parsed<CampaignSpec> CampaignSpec::parse(const Value& v) {
    Parsed<CampaignSpec> res;
    SpecReader r(res.violations);
    if (!v.is_record()) {
        r.report("WrongType", "", "campaign spec must be a record");
        return res;
    }
    CampaignSpec s;
    if (const Value* f = r.get(v, "", "campaign_id", Value::Kind::Text, false)) s.campaign_id = f->as_text();
    if (const Value* f = r.get(v, "", "name", Value::Kind::Text, false)) s.name = f->as_text();

    if (const Value* f = r.get(v, "", "space", Value::Kind::List, true)) {
        for (std::size_t i = 0; i < f->as_list().size(); ++i) {
            auto p = parse_parameter_spec(f->as_list()[i], at("space", i));
            res.violations.insert(res.violations.end(), p.violations.begin(), p.violations.end());
            if (p.value) s.space.push_back(std::move(*p.value));
        }
    }

    if (const Value* f = r.get(v, "", "steps", Value::Kind::List, true)) {
        for (std::size_t i = 0; i < f->as_list().size(); ++i) {
            const Value& sv = f->as_list()[i];
            std::string path = at("steps", i);
            if (!sv.is_record()) {
                r.report("WrongType", path, "step must be a record");
                continue;
            }
            StepTemplate st;
            if (const Value* n = r.get(sv, path, "name", Value::Kind::Text, true)) st.name = n->as_text();
            if (const Value* c = r.get(sv, path, "capability", Value::Kind::Text, true)) st.capability = c->as_text();
            if (const Value* ro = r.get(sv, path, "role", Value::Kind::Text, false)) {
                if (auto role = role_from(ro->as_text()))
                    st.role = *role;
                else
                    r.report("InvalidRole", path + ".role", ro->as_text());
            }
            if (const Value* in = r.get(sv, path, "inputs", Value::Kind::Record, false)) {
                for (const auto& [k, b] : in->as_record())
                    if (auto binding = parse_binding(b, path + ".inputs." + k, r)) st.inputs.emplace(k, *binding);
            }
            s.steps.push_back(std::move(st));
        }
    }

    if (const Value* p = r.get(v, "", "planner", Value::Kind::Record, true)) {
        if (const Value* k = r.get(*p, "planner", "kind", Value::Kind::Text, true)) {
            const std::string& kind = k->as_text();
            if (kind == "grid")
                s.planner.kind = PlannerConfig::Kind::Grid;
            else if (kind == "random")
                s.planner.kind = PlannerConfig::Kind::Random;
            else if (kind == "epsilon_greedy")
                s.planner.kind = PlannerConfig::Kind::EpsilonGreedy;
            else if (kind == "external")
                s.planner.kind = PlannerConfig::Kind::External;
            else
                r.report("InvalidPlanner", "planner.kind", kind);
        }
        if (const Value* f = r.get(*p, "planner", "seed", Value::Kind::Integer, false))
            s.planner.seed = static_cast<std::uint64_t>(f->as_int());
        if (const Value* f = r.get(*p, "planner", "epsilon", Value::Kind::Real, false)) s.planner.epsilon = f->as_number();
        if (const Value* f = r.get(*p, "planner", "capability", Value::Kind::Text, false))
            s.planner.capability = f->as_text();
    }

    if (const Value* o = r.get(v, "", "objective", Value::Kind::Record, true)) {
        if (const Value* f = r.get(*o, "objective", "step", Value::Kind::Text, true)) s.objective.step = f->as_text();
        if (const Value* f = r.get(*o, "objective", "field", Value::Kind::Text, true)) s.objective.field = f->as_text();
        if (const Value* f = r.get(*o, "objective", "direction", Value::Kind::Text, false)) {
            if (f->as_text() == "maximize")
                s.objective.direction = Direction::Maximize;
            else if (f->as_text() == "minimize")
                s.objective.direction = Direction::Minimize;
            else
                r.report("InvalidDirection", "objective.direction", f->as_text());
        }
    }

    if (const Value* st = r.get(v, "", "stop", Value::Kind::Record, false)) {
        if (const Value* f = r.get(*st, "stop", "max_experiments", Value::Kind::Integer, false))
            s.stop.max_experiments = f->as_int();
        if (const Value* f = r.get(*st, "stop", "target_value", Value::Kind::Real, false))
            s.stop.target_value = f->as_number();
        if (const Value* f = r.get(*st, "stop", "max_wall_ms", Value::Kind::Integer, false))
            s.stop.max_wall_ms = f->as_int();
    }

    if (const Value* ep = r.get(v, "", "error_policy", Value::Kind::Record, false)) {
        if (const Value* k = r.get(*ep, "error_policy", "kind", Value::Kind::Text, true)) {
            if (k->as_text() == "abort")
                s.error_policy.kind = ErrorPolicy::Kind::Abort;
            else if (k->as_text() == "skip")
                s.error_policy.kind = ErrorPolicy::Kind::Skip;
            else if (k->as_text() == "retry")
                s.error_policy.kind = ErrorPolicy::Kind::Retry;
            else
                r.report("InvalidErrorPolicy", "error_policy.kind", k->as_text());
        }
        if (const Value* n = r.get(*ep, "error_policy", "n", Value::Kind::Integer, false))
            s.error_policy.retries = static_cast<int>(std::clamp<std::int64_t>(n->as_int(), -1, 1000));
    }

    if (res.violations.empty()) res.value = std::move(s);
    return res;
}

//---------------------------------------------------------------------------//
// Compilation
//---------------------------------------------------------------------------//

CompileResult compile_campaign(const CampaignSpec& spec, const CapabilityCatalog& catalog) {
    CompileResult out;
    auto bad = [&](std::string code, std::string path, std::string detail) {
        out.violations.push_back({std::move(code), std::move(path), std::move(detail)});
    };
    auto warn = [&](std::string code, std::string path, std::string detail) {
        out.warnings.push_back({std::move(code), std::move(path), std::move(detail)});
    };

    // Parameter space
    std::set<std::string> dims;
    for (std::size_t i = 0; i < spec.space.size(); ++i) {
        const auto& d = spec.space[i];
        std::string path = at("space", i);
        if (!dims.insert(d.name).second) bad("DuplicateDimension", path + ".name", d.name);
        auto vs = validate_parameter_spec(d, path);
        out.violations.insert(out.violations.end(), vs.begin(), vs.end());
        if (d.kind == ParamKind::Text || d.kind == ParamKind::List)
            bad("InvalidDimensionKind", path + ".kind", std::string(to_string(d.kind)) + " cannot span a search space");
        if (is_numeric(d.kind) && (!d.min || !d.max)) bad("UnboundedDimension", path, "numeric dimensions need min and max");
        if (spec.planner.builtin() && d.kind == ParamKind::Real && !d.grid_steps)
            bad("MissingGridSteps", path + ".grid_steps", "built-in planners need grid_steps on real dimensions");
    }
    out.grid_size = grid_size(spec.space);
    if (out.grid_size > kMaxGridSize) bad("GridTooLarge", "space", std::to_string(out.grid_size) + " grid points");

    // Step pipeline
    if (spec.steps.empty()) bad("NoSteps", "steps", "at least one step");
    std::map<std::string, std::size_t> step_index;
    for (std::size_t i = 0; i < spec.steps.size(); ++i)
        if (!step_index.emplace(spec.steps[i].name, i).second) bad("DuplicateStep", at("steps", i) + ".name", spec.steps[i].name);

    std::vector<std::optional<CapabilitySchema>> schemas;
    for (std::size_t i = 0; i < spec.steps.size(); ++i) {
        const auto& st = spec.steps[i];
        std::string path = at("steps", i);
        if (st.name.empty()) bad("EmptyName", path + ".name", "step name is required");
        if (st.role == Role::Planner) bad("InvalidStepRole", path + ".role", "planner capabilities cannot be steps");

        auto schema = catalog.lookup(st.capability, st.role);
        schemas.push_back(schema);
        if (!schema)
            warn("UnknownCapability", path + ".capability",
                 st.capability + " (" + to_string(st.role) + ") is not offered by any known module");
        else if (!catalog.has_live_provider(st.capability, st.role))
            warn("NoLiveProvider", path + ".capability", st.capability + " has no live provider right now");

        for (const auto& [param, b] : st.inputs) {
            std::string bpath = path + ".inputs." + param;
            const ParameterSpec* ps = nullptr;
            if (schema) {
                for (const auto& in : schema->inputs)
                    if (in.name == param) ps = &in;
                if (!ps) bad("UnknownInput", bpath, param + " is not an input of " + st.capability);
            }
            switch (b.kind) {
            case Binding::Kind::Literal:
                if (ps) {
                    try {
                        coerce_value(&b.literal, *ps);
                    } catch (const CoercionError& e) {
                        bad("InvalidLiteral", bpath, e.detail());
                    }
                }
                break;
            case Binding::Kind::FromPlan:
                if (!dims.count(b.dimension)) bad("UnknownDimension", bpath, b.dimension);
                break;
            case Binding::Kind::FromStep: {
                auto it = step_index.find(b.step);
                if (it == step_index.end()) {
                    bad("UnknownStep", bpath, b.step);
                } else if (it->second >= i) {
                    bad("ForwardStepReference", bpath, b.step + " does not run before " + st.name);
                } else if (const auto& src = schemas[it->second]) {
                    bool found = std::any_of(src->outputs.begin(), src->outputs.end(),
                                             [&](const auto& o) { return o.name == b.field; });
                    if (!found) bad("UnknownStepField", bpath, b.step + "." + b.field);
                }
                break;
            }
            }
        }
        if (schema) {
            for (const auto& in : schema->inputs)
                if (!st.inputs.count(in.name) && !in.default_value)
                    bad("MissingInput", path + ".inputs", in.name + " has no binding and no default");
        }
    }

    // Objective
    auto obj = step_index.find(spec.objective.step);
    if (obj == step_index.end()) {
        bad("UnknownObjectiveField", "objective.step", "no step named " + spec.objective.step);
    } else if (const auto& schema = schemas[obj->second]) {
        auto it = std::find_if(schema->outputs.begin(), schema->outputs.end(),
                               [&](const auto& o) { return o.name == spec.objective.field; });
        if (it == schema->outputs.end())
            bad("UnknownObjectiveField", "objective.field", spec.objective.step + " produces no " + spec.objective.field);
        else if (!is_numeric(it->kind))
            bad("ObjectiveNotNumeric", "objective.field", spec.objective.field + " is " + to_string(it->kind));
    } else {
        warn("UnverifiedObjective", "objective.field", "capability of " + spec.objective.step + " is unknown");
    }

    // Planner
    if (!(spec.planner.epsilon >= 0.0 && spec.planner.epsilon <= 1.0))
        bad("InvalidEpsilon", "planner.epsilon", "must lie in [0, 1]");
    if (spec.planner.kind == PlannerConfig::Kind::External) {
        if (spec.planner.capability.empty()) {
            bad("MissingPlannerCapability", "planner.capability", "external planners name a capability");
        } else if (!catalog.lookup(spec.planner.capability, Role::Planner)) {
            warn("UnknownCapability", "planner.capability", spec.planner.capability + " (planner) is not offered");
        } else if (!catalog.has_live_provider(spec.planner.capability, Role::Planner)) {
            warn("NoLiveProvider", "planner.capability", spec.planner.capability + " has no live provider right now");
        }
    }

    // Stop criteria and error policy
    if (spec.stop.empty()) bad("NoStopCriterion", "stop", "give max_experiments, target_value or max_wall_ms");
    if (spec.stop.max_experiments && *spec.stop.max_experiments <= 0)
        bad("InvalidStopCriterion", "stop.max_experiments", "must be positive");
    if (spec.stop.max_wall_ms && *spec.stop.max_wall_ms <= 0)
        bad("InvalidStopCriterion", "stop.max_wall_ms", "must be positive");
    if (spec.stop.target_value && !std::isfinite(*spec.stop.target_value))
        bad("InvalidStopCriterion", "stop.target_value", "must be finite");
    if (spec.error_policy.kind == ErrorPolicy::Kind::Retry &&
        (spec.error_policy.retries < 0 || spec.error_policy.retries > kMaxRetries))
        bad("InvalidRetryCount", "error_policy.n", "must lie in [0, " + std::to_string(kMaxRetries) + "]");
    return out;
}

//---------------------------------------------------------------------------//
// Records and state
//---------------------------------------------------------------------------//

Value ExperimentRecord::to_value() const {
    Value::List mods;
    for (const auto& p : provenance)
        mods.push_back(Value::Record{{"step", p.step}, {"module_id", p.module_id}, {"version", p.version}});
    Value::Record r{
        {"campaign_id", campaign_id},
        {"index", index},
        {"params", params},
        {"step_results", step_results},
        {"status", to_string(status)},
        {"attempts", attempts},
        {"started", started},
        {"provenance", Value::Record{{"planner", planner}, {"modules", std::move(mods)}}},
    };
    if (objective) r.emplace("objective", *objective);
    if (ended) r.emplace("ended", *ended);
    if (failure) r.emplace("failure", Value::Record{{"code", failure->code}, {"detail", failure->detail}});
    return r;
}

ExperimentRecord ExperimentRecord::from_value(const Value& v) {
    ExperimentRecord e;
    e.campaign_id = v.at("campaign_id").as_text();
    e.index = v.at("index").as_int();
    e.params = v.at("params").as_record();
    e.step_results = v.at("step_results").as_record();
    auto st = experiment_status_from(v.at("status").as_text());
    if (!st) throw Error("CorruptEntry", "unknown experiment status");
    e.status = *st;
    e.attempts = static_cast<int>(v.at("attempts").as_int());
    e.started = v.at("started").as_int();
    if (const Value* o = v.find("objective")) e.objective = o->as_number();
    if (const Value* en = v.find("ended")) e.ended = en->as_int();
    if (const Value* f = v.find("failure")) e.failure = Failure{f->at("code").as_text(), f->at("detail").as_text()};
    const Value* prov = &v.at("provenance");
    e.planner = prov->at("planner").as_text();
    for (const auto& m : prov->at("modules").as_list())
        e.provenance.push_back(
            {m.at("step").as_text(), m.at("module_id").as_text(), m.at("version").as_text()});
    return e;
}

Value to_value(const PlannerState& p) {
    return Value::Record{{"grid_cursor", static_cast<std::int64_t>(p.grid_cursor)},
                         {"rng_state", std::to_string(p.rng_state)},
                         {"exhausted", p.exhausted}};
}

PlannerState planner_state_from(const Value& v) {
    PlannerState p;
    p.grid_cursor = static_cast<std::uint64_t>(v.at("grid_cursor").as_int());
    p.rng_state = std::stoull(v.at("rng_state").as_text());
    if (const Value* e = v.find("exhausted")) p.exhausted = e->as_bool();
    return p;
}

CampaignState CampaignState::fresh(CampaignSpec spec) {
    CampaignState s;
    s.planner.rng_state = spec.planner.seed;
    s.spec = std::move(spec);
    return s;
}

std::size_t CampaignState::done_count() const {
    return static_cast<std::size_t>(std::count_if(experiments.begin(), experiments.end(),
                                                  [](const auto& e) { return e.status == ExperimentStatus::Done; }));
}

std::vector<Observation> CampaignState::observations() const {
    std::vector<Observation> out;
    out.reserve(experiments.size());
    for (const auto& e : experiments)
        out.push_back({&e.params, e.status == ExperimentStatus::Done ? e.objective : std::nullopt});
    return out;
}

void CampaignState::note_finished(std::size_t index) {
    const auto& e = experiments.at(index);
    if (e.status != ExperimentStatus::Done || !e.objective) return;
    if (!best_index) {
        best_index = index;
        return;
    }
    double cur = *experiments[*best_index].objective;
    bool better = spec.objective.direction == Direction::Maximize ? *e.objective > cur : *e.objective < cur;
    if (better || (*e.objective == cur && index < *best_index)) best_index = index;
}

Value CampaignState::to_value() const {
    Value::List ex;
    for (const auto& e : experiments) ex.push_back(e.to_value());
    Value::Record r{{"campaign_id", spec.campaign_id},
                    {"spec", spec.to_value()},
                    {"status", to_string(status)},
                    {"experiments", std::move(ex)},
                    {"planner", aeos::to_value(planner)}};
    if (best_index) r.emplace("best_index", static_cast<std::int64_t>(*best_index));
    if (started_ms) r.emplace("started_ms", *started_ms);
    if (stop_reason) r.emplace("stop_reason", to_string(*stop_reason));
    return r;
}

//---------------------------------------------------------------------------//
// Stop rule and control
//---------------------------------------------------------------------------//

StopDecision evaluate_stop(const CampaignState& s, std::int64_t now_ms) {
    const auto& stop = s.spec.stop;
    if (stop.max_experiments && static_cast<std::int64_t>(s.done_count()) >= *stop.max_experiments)
        return StopDecision::halt(StopReason::BudgetExhausted);
    if (stop.target_value && s.best_index) {
        double best = *s.experiments[*s.best_index].objective;
        bool reached = s.spec.objective.direction == Direction::Maximize ? best >= *stop.target_value
                                                                         : best <= *stop.target_value;
        if (reached) return StopDecision::halt(StopReason::TargetReached);
    }
    if (stop.max_wall_ms && s.started_ms && now_ms - *s.started_ms >= *stop.max_wall_ms)
        return StopDecision::halt(StopReason::WallClockExceeded);
    switch (s.spec.planner.kind) {
    case PlannerConfig::Kind::Grid:
        if (s.planner.grid_cursor >= grid_size(s.spec.space)) return StopDecision::halt(StopReason::PlannerExhausted);
        break;
    case PlannerConfig::Kind::External:
        if (s.planner.exhausted) return StopDecision::halt(StopReason::PlannerExhausted);
        break;
    default: break;
    }
    return StopDecision::go();
}

CampaignStatus next_status(CampaignStatus from, ControlAction action) {
    using S = CampaignStatus;
    switch (action) {
    case ControlAction::Start:
        if (from == S::Draft) return S::Running;
        break;
    case ControlAction::Pause:
        if (from == S::Running) return S::Paused;
        break;
    case ControlAction::Resume:
        if (from == S::Paused) return S::Running;
        break;
    case ControlAction::Abort:
        if (from == S::Running || from == S::Paused) return S::Aborted;
        break;
    }
    throw CampaignError(CampaignErrc::InvalidTransition,
                        std::string("cannot ") + to_string(action) + " a " + to_string(from) + " campaign");
}

CampaignState control(CampaignState state, ControlAction action, std::int64_t now_ms) {
    state.status = next_status(state.status, action);
    if (action == ControlAction::Start && !state.started_ms) state.started_ms = now_ms;
    if (action == ControlAction::Abort) {
        state.stop_reason = StopReason::Aborted;
        if (!state.experiments.empty()) {
            auto& last = state.experiments.back();
            if (last.status == ExperimentStatus::Running) {
                last.status = ExperimentStatus::Failed;
                last.failure = Failure{"aborted", "campaign aborted while the experiment was in flight"};
                last.ended = now_ms;
            } else if (last.status == ExperimentStatus::Planned) {
                last.status = ExperimentStatus::Skipped;
                last.failure = Failure{"aborted", "campaign aborted before execution"};
                last.ended = now_ms;
            }
        }
    }
    return state;
}

//---------------------------------------------------------------------------//
// Execution
//---------------------------------------------------------------------------//

StepOutcome execute_step(const StepTemplate& step, const Value::Record& inputs, Dispatcher& dispatcher,
                         std::stop_token stop) {
    auto& registry = dispatcher.registry();
    std::string module_id;
    try {
        module_id = registry.resolve_capability(step.capability, step.role);
    } catch (const RegistryError& e) {
        throw StepError(StepErrc::NoProvider, e.detail());
    }
    auto rec = registry.find(module_id);
    const CapabilitySchema* schema = rec ? rec->descriptor.find(step.capability) : nullptr;
    if (!schema) throw StepError(StepErrc::NoProvider, module_id + " vanished");

    bool structured = step.role == Role::Planner;
    Value::Record request = inputs;
    if (!structured) {
        try {
            request = coerce_record(inputs, schema->inputs, false);
        } catch (const CoercionError& e) {
            throw StepError(StepErrc::CoercionError, e.what());
        }
    }

    auto result = dispatcher.call(module_id, step.capability, request,
                                  std::chrono::milliseconds(schema->default_timeout_ms), std::move(stop));

    Value::Record outputs = std::move(result.outputs);
    if (!structured) {
        try {
            outputs = coerce_record(outputs, schema->outputs, true);
        } catch (const CoercionError& e) {
            throw StepError(StepErrc::SchemaViolation, e.what());
        }
    }
    return StepOutcome{std::move(outputs), StepProvenance{step.name, module_id, rec->descriptor.version}};
}

Value::Record external_planner_inputs(const CampaignState& state) {
    Value::List dims, history;
    for (const auto& d : state.spec.space) dims.push_back(d.to_value());
    for (const auto& e : state.experiments) {
        if (!is_terminal(e.status)) continue;
        Value::Record h{{"index", e.index}, {"params", e.params}};
        h.emplace("objective", e.objective ? Value{*e.objective} : Value{});
        history.push_back(std::move(h));
    }
    return Value::Record{{"space", Value::Record{{"dimensions", std::move(dims)}}},
                         {"history", std::move(history)},
                         {"direction", to_string(state.spec.objective.direction)},
                         {"seed", static_cast<std::int64_t>(state.spec.planner.seed)},
                         {"epsilon", state.spec.planner.epsilon}};
}

namespace {

struct ProposalOutcome {
    std::optional<Value::Record> params;
    StopDecision stop;
    std::optional<Failure> failure;
};

ProposalOutcome propose(CampaignState& st, IterationContext& ctx) {
    const auto& spec = st.spec;
    switch (spec.planner.kind) {
    case PlannerConfig::Kind::Grid: {
        GridCursor cur{st.planner.grid_cursor};
        auto p = grid_next(cur, spec.space);
        if (!p) return {std::nullopt, StopDecision::halt(StopReason::PlannerExhausted), std::nullopt};
        st.planner.grid_cursor = cur.flat_index;
        return {std::move(p), {}, std::nullopt};
    }
    case PlannerConfig::Kind::Random: {
        SplitMix64 rng(st.planner.rng_state);
        auto p = random_next(rng, spec.space);
        st.planner.rng_state = rng.state();
        return {std::move(p), {}, std::nullopt};
    }
    case PlannerConfig::Kind::EpsilonGreedy: {
        SplitMix64 rng(st.planner.rng_state);
        auto obs = st.observations();
        auto p = epsilon_greedy_next(rng, spec.space, obs, spec.objective.direction, spec.planner.epsilon);
        st.planner.rng_state = rng.state();
        return {std::move(p.params), {}, std::nullopt};
    }
    case PlannerConfig::Kind::External: break;
    }

    StepTemplate planner_step{"planner", spec.planner.capability, Role::Planner, {}};
    auto inputs = external_planner_inputs(st);
    Failure last;
    for (int attempt = 1; attempt <= spec.error_policy.max_attempts(); ++attempt) {
        try {
            auto out = ctx.execute(planner_step, inputs);
            if (const Value* ex = Value(out.outputs).find("exhausted"); ex && ex->is_bool() && ex->as_bool()) {
                st.planner.exhausted = true;
                return {std::nullopt, StopDecision::halt(StopReason::PlannerExhausted), std::nullopt};
            }
            auto it = out.outputs.find("params");
            if (it == out.outputs.end() || !it->second.is_record())
                throw StepError(StepErrc::SchemaViolation, "planner returned no params record");
            try {
                return {coerce_record(it->second.as_record(), spec.space, false), {}, std::nullopt};
            } catch (const CoercionError& e) {
                throw StepError(StepErrc::CoercionError, e.what());
            }
        } catch (const StepError& e) {
            last = Failure{e.code(), e.detail()};
            if (e.errc() == StepErrc::Aborted || ctx.cancelled())
                return {std::nullopt, StopDecision::halt(StopReason::Aborted), last};
        }
    }
    return {std::nullopt, StopDecision::halt(StopReason::FatalError), last};
}

std::optional<Value::Record> resolve_inputs(const StepTemplate& step, const ExperimentRecord& rec, Failure& why) {
    Value::Record out;
    for (const auto& [param, b] : step.inputs) {
        switch (b.kind) {
        case Binding::Kind::Literal: out.emplace(param, b.literal); break;
        case Binding::Kind::FromPlan: {
            auto it = rec.params.find(b.dimension);
            if (it == rec.params.end()) {
                why = {"SchemaViolation", "planner supplied no " + b.dimension};
                return std::nullopt;
            }
            out.emplace(param, it->second);
            break;
        }
        case Binding::Kind::FromStep: {
            auto s = rec.step_results.find(b.step);
            const Value* f = s == rec.step_results.end() ? nullptr : s->second.find(b.field);
            if (!f) {
                why = {"SchemaViolation", b.step + " produced no " + b.field};
                return std::nullopt;
            }
            out.emplace(param, *f);
            break;
        }
        }
    }
    return out;
}

}  // namespace

IterationResult run_iteration(CampaignState& st, IterationContext& ctx) {
    if (st.status != CampaignStatus::Running)
        throw CampaignError(CampaignErrc::NotRunning, std::string("campaign is ") + to_string(st.status));
    const CampaignSpec& spec = st.spec;

    auto proposal = propose(st, ctx);
    if (!proposal.params) return {proposal.stop, std::nullopt};

    std::size_t idx = st.experiments.size();
    {
        ExperimentRecord rec;
        rec.campaign_id = spec.campaign_id;
        rec.index = static_cast<std::int64_t>(idx);
        rec.params = std::move(*proposal.params);
        rec.status = ExperimentStatus::Running;
        rec.started = ctx.now_ms();
        rec.planner = spec.planner.name();
        st.experiments.push_back(std::move(rec));
    }
    ctx.on_appended(st, st.experiments[idx]);

    ExperimentRecord& rec = st.experiments[idx];
    IterationResult result{StopDecision::go(), idx};

    auto finish = [&](ExperimentStatus status) {
        rec.status = status;
        rec.ended = ctx.now_ms();
        st.note_finished(idx);
        ctx.on_finished(st, rec);
    };

    if (ctx.cancelled()) {
        rec.failure = Failure{"aborted", "campaign aborted before execution"};
        finish(ExperimentStatus::Skipped);
        result.stop = StopDecision::halt(StopReason::Aborted);
        return result;
    }

    std::optional<Failure> failure;
    bool aborted = false;
    for (const auto& step : spec.steps) {
        Failure why;
        auto inputs = resolve_inputs(step, rec, why);
        if (!inputs) {
            failure = why;
            break;
        }
        int attempt = 0;
        while (true) {
            ++attempt;
            try {
                auto out = ctx.execute(step, *inputs);
                rec.step_results[step.name] = std::move(out.outputs);
                rec.provenance.push_back(std::move(out.provenance));
                break;
            } catch (const StepError& e) {
                if (e.errc() == StepErrc::Aborted || ctx.cancelled()) {
                    failure = Failure{"aborted", e.detail()};
                    aborted = true;
                    break;
                }
                if (attempt < spec.error_policy.max_attempts()) continue;
                std::string detail = e.detail();
                if (!e.module_code().empty()) detail = e.module_code() + ": " + detail;
                failure = Failure{e.code(), step.name + ": " + detail};
                break;
            }
        }
        rec.attempts = std::max(rec.attempts, attempt);
        if (failure) break;
    }

    if (!failure) {
        const Value* v = nullptr;
        if (auto s = rec.step_results.find(spec.objective.step); s != rec.step_results.end())
            v = s->second.find(spec.objective.field);
        if (v && v->is_number() && std::isfinite(v->as_number()))
            rec.objective = v->as_number();
        else
            failure = Failure{"SchemaViolation", "objective " + spec.objective.step + "." + spec.objective.field +
                                                     " is missing or not a finite number"};
    }

    if (failure) {
        rec.failure = failure;
        finish(ExperimentStatus::Failed);
        if (aborted)
            result.stop = StopDecision::halt(StopReason::Aborted);
        else if (spec.error_policy.kind == ErrorPolicy::Kind::Abort)
            result.stop = StopDecision::halt(StopReason::FatalError);
    } else {
        finish(ExperimentStatus::Done);
    }
    return result;
}

}  // namespace aeos
