// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Campaign model and the closed experimentation loop:
// plan -> execute steps -> analyze -> record -> stop-check.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "aeos/dispatcher.hpp"
#include "aeos/planners.hpp"
#include "aeos/registry.hpp"
#include "aeos/schema.hpp"

namespace aeos {

//---------------------------------------------------------------------------//
// Campaign specification
//---------------------------------------------------------------------------//

/// Where one step input comes from.
struct Binding {
    enum class Kind { Literal, FromPlan, FromStep };
    Kind kind = Kind::Literal;
    Value literal;
    std::string dimension;
    std::string step;
    std::string field;

    static Binding lit(Value v) { return {Kind::Literal, std::move(v), {}, {}, {}}; }
    static Binding plan(std::string dim) { return {Kind::FromPlan, {}, std::move(dim), {}, {}}; }
    static Binding from_step(std::string step, std::string field) {
        return {Kind::FromStep, {}, {}, std::move(step), std::move(field)};
    }

    Value to_value() const;
    friend bool operator==(const Binding&, const Binding&) = default;
};

struct StepTemplate {
    std::string name;
    std::string capability;
    Role role = Role::Device;
    std::map<std::string, Binding> inputs;

    Value to_value() const;
    friend bool operator==(const StepTemplate&, const StepTemplate&) = default;
};

struct PlannerConfig {
    enum class Kind { Grid, Random, EpsilonGreedy, External };
    Kind kind = Kind::Grid;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    /// External planners only.
    std::string capability;

    std::string name() const;
    bool builtin() const noexcept { return kind != Kind::External; }
    Value to_value() const;
    friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

struct Objective {
    std::string step;
    std::string field;
    Direction direction = Direction::Maximize;
    friend bool operator==(const Objective&, const Objective&) = default;
};

struct StopCriteria {
    std::optional<std::int64_t> max_experiments;
    std::optional<double> target_value;
    std::optional<std::int64_t> max_wall_ms;
    bool empty() const noexcept { return !max_experiments && !target_value && !max_wall_ms; }
    friend bool operator==(const StopCriteria&, const StopCriteria&) = default;
};

struct ErrorPolicy {
    enum class Kind { Abort, Skip, Retry };
    Kind kind = Kind::Abort;
    int retries = 0;

    int max_attempts() const noexcept { return kind == Kind::Retry ? retries + 1 : 1; }
    friend bool operator==(const ErrorPolicy&, const ErrorPolicy&) = default;
};

inline constexpr int kMaxRetries = 5;
inline constexpr std::uint64_t kMaxGridSize = 1'000'000'000;

struct CampaignSpec {
    std::string campaign_id;
    std::string name;
    ParameterSpace space;
    std::vector<StepTemplate> steps;
    PlannerConfig planner;
    Objective objective;
    StopCriteria stop;
    ErrorPolicy error_policy;

    const StepTemplate* find_step(std::string_view name) const;
    Value to_value() const;
    static Parsed<CampaignSpec> parse(const Value& v);
    friend bool operator==(const CampaignSpec&, const CampaignSpec&) = default;
};

struct CompileResult {
    Violations violations;
    Violations warnings;
    std::uint64_t grid_size = 0;
    bool ok() const noexcept { return violations.empty(); }
};

/// Checks references, bindings and invariants. Capabilities with no live
/// provider produce warnings; unknown capabilities cannot be type-checked
/// and are also reported as warnings.
CompileResult compile_campaign(const CampaignSpec& spec, const CapabilityCatalog& catalog);

//---------------------------------------------------------------------------//
// Runtime state
//---------------------------------------------------------------------------//

enum class ExperimentStatus { Planned, Running, Done, Failed, Skipped };
enum class CampaignStatus { Draft, Running, Paused, Completed, Aborted, Failed };
enum class StopReason { BudgetExhausted, TargetReached, WallClockExceeded, PlannerExhausted, Aborted, FatalError };
enum class ControlAction { Start, Pause, Resume, Abort };

const char* to_string(ExperimentStatus s) noexcept;
const char* to_string(CampaignStatus s) noexcept;
const char* to_string(StopReason r) noexcept;
const char* to_string(ControlAction a) noexcept;
std::optional<ExperimentStatus> experiment_status_from(std::string_view s) noexcept;
std::optional<CampaignStatus> campaign_status_from(std::string_view s) noexcept;
std::optional<StopReason> stop_reason_from(std::string_view s) noexcept;
std::optional<ControlAction> control_action_from(std::string_view s) noexcept;

inline bool is_terminal(ExperimentStatus s) noexcept {
    return s == ExperimentStatus::Done || s == ExperimentStatus::Failed || s == ExperimentStatus::Skipped;
}
inline bool is_terminal(CampaignStatus s) noexcept {
    return s == CampaignStatus::Completed || s == CampaignStatus::Aborted || s == CampaignStatus::Failed;
}

struct StepProvenance {
    std::string step;
    std::string module_id;
    std::string version;
    friend bool operator==(const StepProvenance&, const StepProvenance&) = default;
};

struct Failure {
    std::string code;
    std::string detail;
    friend bool operator==(const Failure&, const Failure&) = default;
};

struct ExperimentRecord {
    std::string campaign_id;
    std::int64_t index = 0;
    Value::Record params;
    /// step name -> outputs
    Value::Record step_results;
    /// Present iff status is DONE.
    std::optional<double> objective;
    ExperimentStatus status = ExperimentStatus::Planned;
    int attempts = 0;
    std::int64_t started = 0;
    std::optional<std::int64_t> ended;
    std::string planner;
    std::vector<StepProvenance> provenance;
    std::optional<Failure> failure;

    Value to_value() const;
    static ExperimentRecord from_value(const Value& v);
    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct PlannerState {
    std::uint64_t grid_cursor = 0;
    std::uint64_t rng_state = 0;
    /// An external planner reported that it has nothing left to propose.
    bool exhausted = false;
    friend bool operator==(const PlannerState&, const PlannerState&) = default;
};

Value to_value(const PlannerState& p);
PlannerState planner_state_from(const Value& v);

struct CampaignState {
    CampaignSpec spec;
    CampaignStatus status = CampaignStatus::Draft;
    std::vector<ExperimentRecord> experiments;
    PlannerState planner;
    std::optional<std::size_t> best_index;
    /// Wall-clock ms of the first start; the wall-clock budget counts from here.
    std::optional<std::int64_t> started_ms;
    std::optional<StopReason> stop_reason;

    static CampaignState fresh(CampaignSpec spec);
    std::size_t done_count() const;
    std::vector<Observation> observations() const;
    /// Folds a terminal experiment into best_index.
    void note_finished(std::size_t index);
    Value to_value() const;
};

struct StopDecision {
    std::optional<StopReason> reason;
    bool stop() const noexcept { return reason.has_value(); }
    static StopDecision go() { return {}; }
    static StopDecision halt(StopReason r) { return {r}; }
    friend bool operator==(const StopDecision&, const StopDecision&) = default;
};

/// Precedence: BudgetExhausted > TargetReached > WallClockExceeded > PlannerExhausted.
StopDecision evaluate_stop(const CampaignState& state, std::int64_t now_ms);

enum class CampaignErrc { InvalidTransition, ValidationFailed, UnknownCampaign, NotRunning };

const char* to_string(CampaignErrc c) noexcept;

class CampaignError : public Error {
public:
    CampaignError(CampaignErrc c, const std::string& detail, Violations violations = {})
        : Error(to_string(c), detail), errc_(c), violations_(std::move(violations)) {}
    CampaignErrc errc() const noexcept { return errc_; }
    const Violations& violations() const noexcept { return violations_; }

private:
    CampaignErrc errc_;
    Violations violations_;
};

/// Pure status transition. Abort also closes out an unfinished last
/// experiment (RUNNING -> FAILED "aborted", PLANNED -> SKIPPED).
/// Throws InvalidTransition.
CampaignState control(CampaignState state, ControlAction action, std::int64_t now_ms);
CampaignStatus next_status(CampaignStatus from, ControlAction action);

//---------------------------------------------------------------------------//
// One loop turn
//---------------------------------------------------------------------------//

struct StepOutcome {
    Value::Record outputs;
    StepProvenance provenance;
};

/// Executes one step against whichever live module provides it: resolves the
/// provider, coerces inputs, dispatches and validates the declared outputs.
/// Planner-role capabilities use the relaxed structured signature and skip
/// scalar validation.
StepOutcome execute_step(const StepTemplate& step, const Value::Record& inputs, Dispatcher& dispatcher,
                         std::stop_token stop = {});

/// Everything run_iteration needs from the outside world.
class IterationContext {
public:
    virtual ~IterationContext() = default;
    virtual StepOutcome execute(const StepTemplate& step, const Value::Record& inputs) = 0;
    virtual std::int64_t now_ms() = 0;
    virtual bool cancelled() { return false; }
    /// A new RUNNING experiment, with the planner state after its proposal.
    virtual void on_appended(const CampaignState&, const ExperimentRecord&) {}
    /// An experiment reached a terminal status.
    virtual void on_finished(const CampaignState&, const ExperimentRecord&) {}
};

/// IterationContext backed by the dispatcher; cancellation via stop_token.
class DispatchContext : public IterationContext {
public:
    DispatchContext(Dispatcher& d, const Clock& clock, std::stop_token stop = {})
        : dispatcher_(d), clock_(clock), stop_(std::move(stop)) {}

    StepOutcome execute(const StepTemplate& step, const Value::Record& inputs) override {
        return execute_step(step, inputs, dispatcher_, stop_);
    }
    std::int64_t now_ms() override { return clock_.wall_ms(); }
    bool cancelled() override { return stop_.stop_requested(); }

private:
    Dispatcher& dispatcher_;
    const Clock& clock_;
    std::stop_token stop_;
};

struct IterationResult {
    /// Set when the loop must stop: planner exhausted, fatal error under the
    /// abort policy, or cancellation.
    StopDecision stop;
    /// Index of the experiment this turn appended, if any.
    std::optional<std::size_t> experiment;
};

/// Runs exactly one loop turn on a RUNNING campaign.
IterationResult run_iteration(CampaignState& state, IterationContext& ctx);

/// Request inputs sent to an external planner capability.
Value::Record external_planner_inputs(const CampaignState& state);

}  // namespace aeos
