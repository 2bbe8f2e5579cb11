// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/core.hpp"

#include <iostream>

namespace aeos {

Value ApiEvent::to_value() const {
    return Value::Record{{"seq", static_cast<std::int64_t>(seq)}, {"type", type}, {"body", body}};
}

ApiEvent to_api_event(const JournalEntry& e) {
    ApiEvent ev{e.seq, {}, {}};
    switch (e.kind) {
    case EntryKind::ModuleEvent: {
        auto it = e.body.find("event");
        ev.type = it != e.body.end() && it->second.is_text() ? it->second.as_text() : "module_event";
        ev.body = e.body;
        break;
    }
    case EntryKind::CampaignCreated: {
        const Value& spec = e.body.at("spec");
        ev.type = "campaign_status";
        ev.body = Value::Record{{"campaign_id", spec.at("campaign_id")}, {"name", spec.at("name")}, {"status", "DRAFT"}};
        break;
    }
    case EntryKind::CampaignStatusChanged:
        ev.type = "campaign_status";
        ev.body = e.body;
        break;
    case EntryKind::ExperimentAppended:
        ev.type = "experiment_started";
        ev.body = Value::Record{{"campaign_id", e.body.at("campaign_id")}, {"experiment", e.body.at("experiment")}};
        break;
    case EntryKind::ExperimentUpdated: {
        const Value* st = e.body.at("experiment").find("status");
        bool done = st && st->is_text() && st->as_text() == to_string(ExperimentStatus::Done);
        ev.type = done ? "experiment_done" : "experiment_failed";
        ev.body = e.body;
        break;
    }
    }
    return ev;
}

Value campaign_summary(const CampaignState& c) {
    Value::Record r{{"campaign_id", c.spec.campaign_id},
                    {"name", c.spec.name},
                    {"status", to_string(c.status)},
                    {"planner", c.spec.planner.name()},
                    {"experiment_count", static_cast<std::int64_t>(c.experiments.size())},
                    {"done_count", static_cast<std::int64_t>(c.done_count())}};
    if (c.best_index) {
        const auto& best = c.experiments[*c.best_index];
        r.emplace("best_index", static_cast<std::int64_t>(*c.best_index));
        r.emplace("best_objective", *best.objective);
        r.emplace("best_params", best.params);
    }
    if (c.stop_reason) r.emplace("stop_reason", to_string(*c.stop_reason));
    return r;
}

namespace {

/// Lets several journals share one store across core restarts in tests.
class SharedStore final : public JournalStore {
public:
    explicit SharedStore(std::shared_ptr<JournalStore> s) : s_(std::move(s)) {}
    std::string read_all() override { return s_->read_all(); }
    void truncate(std::size_t size) override { s_->truncate(size); }
    void append(std::string_view bytes) override { s_->append(bytes); }

private:
    std::shared_ptr<JournalStore> s_;
};

std::unique_ptr<JournalStore> open_store(const CoreOptions& o) {
    if (o.store) return std::make_unique<SharedStore>(o.store);
    if (o.data_dir.empty()) return std::make_unique<MemoryJournalStore>();
    std::filesystem::create_directories(o.data_dir);
    return std::make_unique<FileJournalStore>(o.data_dir / kJournalFileName, o.fsync);
}

}  // namespace

class Core::RunnerContext final : public IterationContext {
public:
    RunnerContext(Core& core, std::stop_token stop) : core_(core), stop_(std::move(stop)) {}

    StepOutcome execute(const StepTemplate& step, const Value::Record& inputs) override {
        return execute_step(step, inputs, core_.dispatcher_, stop_);
    }
    std::int64_t now_ms() override { return core_.clock_.wall_ms(); }
    bool cancelled() override { return stop_.stop_requested(); }
    void on_appended(const CampaignState& st, const ExperimentRecord& e) override {
        core_.record(EntryKind::ExperimentAppended, experiment_appended_body(e, st.planner));
    }
    void on_finished(const CampaignState&, const ExperimentRecord& e) override {
        core_.record(EntryKind::ExperimentUpdated, experiment_updated_body(e));
    }

private:
    Core& core_;
    std::stop_token stop_;
};

Core::Core(CoreOptions options)
    : clock_(options.clock ? *options.clock : system_clock_), registry_(clock_), dispatcher_(registry_) {
    journal_ = std::make_unique<Journal>(open_store(options), clock_);
    notes_ = journal_->warnings();
    recover(replay(journal_->entries()));
    registry_.add_listener([this](const RegistryEvent& ev) { record_module_event(ev); });

    if (options.sweeper) {
        auto interval = options.sweep_interval;
        sweeper_ = std::jthread([this, interval](std::stop_token st) {
            std::mutex m;
            std::condition_variable_any cv;
            std::unique_lock lock(m);
            while (!st.stop_requested()) {
                registry_.sweep_stale();
                cv.wait_for(lock, st, interval, [] { return false; });
            }
        });
    }
}

Core::~Core() {
    if (sweeper_.joinable()) {
        sweeper_.request_stop();
        sweeper_.join();
    }
    std::vector<std::string> ids;
    {
        std::lock_guard lock(runners_mu_);
        for (auto& [id, r] : runners_) ids.push_back(id);
    }
    for (const auto& id : ids) {
        try {
            control(id, ControlAction::Pause);
        } catch (const std::exception&) {
            // Already settled, or the journal refused the entry.
        }
    }
    {
        std::lock_guard lock(runners_mu_);
        runners_.clear();
    }
    try {
        dispatcher_.shutdown_all("core shutting down");
    } catch (const std::exception&) {
    }
    closing_ = true;
}

void Core::recover(Recovery rec) {
    state_ = std::move(rec.state);
    for (const auto& id : rec.interrupted) {
        auto& c = state_.campaigns.at(id);
        std::optional<PlannerState> rewind;
        if (!c.experiments.empty() && !is_terminal(c.experiments.back().status)) {
            ExperimentRecord e = c.experiments.back();
            e.status = ExperimentStatus::Failed;
            e.failure = Failure{"interrupted", "the core stopped while this experiment was in flight"};
            e.ended = clock_.wall_ms();
            record(EntryKind::ExperimentUpdated, experiment_updated_body(e));
            // Propose the lost point again on resume.
            auto it = state_.planner_before_last.find(id);
            rewind = it != state_.planner_before_last.end() ? it->second : CampaignState::fresh(c.spec).planner;
        }
        record(EntryKind::CampaignStatusChanged, status_changed_body(id, CampaignStatus::Paused, std::nullopt,
                                                                     std::nullopt, rewind ? &*rewind : nullptr,
                                                                     "recovered"));
        notes_.push_back("campaign " + id + " was RUNNING; restored as PAUSED");
    }
}

JournalEntry Core::record(EntryKind kind, Value::Record body) {
    std::lock_guard lock(state_mu_);
    auto e = journal_->append(kind, std::move(body));
    apply(state_, e);
    state_cv_.notify_all();
    return e;
}

void Core::record_module_event(const RegistryEvent& ev) {
    if (closing_) return;
    Value::Record body{{"event", to_string(ev.kind)},
                       {"module_id", ev.module_id},
                       {"module_name", ev.module_name},
                       {"at", ev.timestamp}};
    try {
        journal_->append(EntryKind::ModuleEvent, std::move(body));
    } catch (const JournalError& e) {
        std::cerr << "aeos: could not journal " << to_string(ev.kind) << " for " << ev.module_id << ": " << e.what()
                  << "\n";
    }
}

const CampaignState& Core::require(const std::string& id) const {
    const CampaignState* c = state_.find(id);
    if (!c) throw CampaignError(CampaignErrc::UnknownCampaign, "no campaign " + id);
    return *c;
}

Core::Created Core::create_campaign(const Value& raw_spec) {
    auto parsed = CampaignSpec::parse(raw_spec);
    if (!parsed.value)
        throw CampaignError(CampaignErrc::ValidationFailed, "campaign spec is malformed", std::move(parsed.violations));
    return create_campaign(std::move(*parsed.value));
}

Core::Created Core::create_campaign(CampaignSpec spec) {
    auto compiled = compile_campaign(spec, registry_);
    if (!compiled.ok())
        throw CampaignError(CampaignErrc::ValidationFailed, "campaign spec failed validation",
                            std::move(compiled.violations));

    std::lock_guard ctl(control_mu_);
    std::string id;
    {
        std::lock_guard lock(state_mu_);
        if (spec.campaign_id.empty()) {
            std::uint64_t n = state_.campaign_counter;
            do id = "c-" + std::to_string(++n);
            while (state_.campaigns.count(id));
            spec.campaign_id = id;
        } else if (state_.campaigns.count(spec.campaign_id)) {
            throw CampaignError(CampaignErrc::ValidationFailed, "campaign id already exists",
                                {{"DuplicateCampaign", "campaign_id", spec.campaign_id}});
        }
        id = spec.campaign_id;
    }
    record(EntryKind::CampaignCreated, campaign_created_body(spec));
    std::lock_guard lock(state_mu_);
    return Created{state_.campaigns.at(id), std::move(compiled.warnings)};
}

std::unique_ptr<Core::Runner> Core::take_runner(const std::string& id) {
    std::lock_guard lock(runners_mu_);
    auto it = runners_.find(id);
    if (it == runners_.end()) return nullptr;
    auto r = std::move(it->second);
    runners_.erase(it);
    return r;
}

void Core::spawn_runner(const std::string& id) {
    auto r = std::make_unique<Runner>();
    Runner* self = r.get();
    {
        std::lock_guard lock(runners_mu_);
        runners_[id] = std::move(r);
    }
    self->thread = std::jthread([this, id, self](std::stop_token st) { run_campaign(st, id, self); });
}

CampaignState Core::control(const std::string& id, ControlAction action) {
    std::lock_guard ctl(control_mu_);
    CampaignState current;
    {
        std::lock_guard lock(state_mu_);
        current = require(id);
    }
    CampaignStatus target = next_status(current.status, action);

    switch (action) {
    case ControlAction::Start:
    case ControlAction::Resume: {
        take_runner(id).reset();  // joins a runner that already finished
        std::optional<std::int64_t> started;
        if (action == ControlAction::Start) started = clock_.wall_ms();
        record(EntryKind::CampaignStatusChanged, status_changed_body(id, target, std::nullopt, started));
        spawn_runner(id);
        break;
    }
    case ControlAction::Pause: {
        if (auto r = take_runner(id)) {
            r->pause = true;
            r->thread.join();
        }
        std::lock_guard lock(state_mu_);
        if (require(id).status != CampaignStatus::Running)
            throw CampaignError(CampaignErrc::InvalidTransition,
                                std::string("campaign became ") + to_string(require(id).status) + " before pausing");
        break;
    }
    case ControlAction::Abort: {
        if (auto r = take_runner(id)) {
            r->thread.request_stop();
            r->thread.join();
        }
        break;
    }
    }

    if (action == ControlAction::Pause) {
        record(EntryKind::CampaignStatusChanged, status_changed_body(id, target));
    } else if (action == ControlAction::Abort) {
        CampaignState latest;
        {
            std::lock_guard lock(state_mu_);
            latest = require(id);
        }
        if (is_terminal(latest.status))
            throw CampaignError(CampaignErrc::InvalidTransition,
                                std::string("campaign became ") + to_string(latest.status) + " before aborting");
        auto closed = aeos::control(latest, ControlAction::Abort, clock_.wall_ms());
        if (!latest.experiments.empty() && closed.experiments.back() != latest.experiments.back())
            record(EntryKind::ExperimentUpdated, experiment_updated_body(closed.experiments.back()));
        record(EntryKind::CampaignStatusChanged, status_changed_body(id, target, StopReason::Aborted));
    }

    std::lock_guard lock(state_mu_);
    return require(id);
}

void Core::finish_campaign(const std::string& id, CampaignStatus status, StopReason reason,
                           const PlannerState* planner, const std::string& note) {
    record(EntryKind::CampaignStatusChanged, status_changed_body(id, status, reason, std::nullopt, planner, note));
}

void Core::run_campaign(std::stop_token stop, std::string id, Runner* self) {
    CampaignState st;
    {
        std::lock_guard lock(state_mu_);
        st = state_.campaigns.at(id);
    }
    RunnerContext ctx(*this, stop);
    try {
        while (!stop.stop_requested() && !self->pause) {
            auto decision = evaluate_stop(st, clock_.wall_ms());
            if (decision.stop()) {
                finish_campaign(id, CampaignStatus::Completed, *decision.reason, nullptr, {});
                return;
            }
            auto res = run_iteration(st, ctx);
            if (!res.stop.stop()) continue;
            switch (*res.stop.reason) {
            case StopReason::Aborted: return;  // the aborting caller journals the transition
            case StopReason::FatalError: {
                std::string note;
                if (res.experiment && st.experiments[*res.experiment].failure)
                    note = st.experiments[*res.experiment].failure->code + ": " +
                           st.experiments[*res.experiment].failure->detail;
                else
                    note = "planner failed";
                finish_campaign(id, CampaignStatus::Failed, StopReason::FatalError, &st.planner, note);
                return;
            }
            default: finish_campaign(id, CampaignStatus::Completed, *res.stop.reason, &st.planner, {}); return;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "aeos: campaign " << id << " runner stopped: " << e.what() << "\n";
        try {
            finish_campaign(id, CampaignStatus::Failed, StopReason::FatalError, nullptr, e.what());
        } catch (const std::exception&) {
            // The journal is unusable; keep memory honest without it.
            std::lock_guard lock(state_mu_);
            auto& c = state_.campaigns.at(id);
            c.status = CampaignStatus::Failed;
            c.stop_reason = StopReason::FatalError;
            state_cv_.notify_all();
        }
    }
}

std::vector<CampaignState> Core::list_campaigns() const {
    std::lock_guard lock(state_mu_);
    std::vector<CampaignState> out;
    for (const auto& id : state_.order) out.push_back(state_.campaigns.at(id));
    return out;
}

CampaignState Core::campaign(const std::string& id) const {
    std::lock_guard lock(state_mu_);
    return require(id);
}

std::vector<ExperimentRecord> Core::query(const std::string& id, const ExperimentQuery& q) const {
    std::lock_guard lock(state_mu_);
    return query_experiments(require(id), q);
}

std::string Core::export_campaign(const std::string& id, ExportFormat format) const {
    std::lock_guard lock(state_mu_);
    return aeos::export_campaign(require(id), format);
}

CoreState Core::snapshot() const {
    std::lock_guard lock(state_mu_);
    return state_;
}

bool Core::wait_settled(const std::string& id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(state_mu_);
    return state_cv_.wait_for(lock, timeout, [&] { return require(id).status != CampaignStatus::Running; });
}

Value::Record Core::manual_execute(const std::string& module_id, const std::string& capability,
                                   const Value::Record& inputs) {
    auto rec = registry_.find(module_id);
    if (!rec) throw RegistryError(RegistryErrc::UnknownModule, "no module " + module_id);
    const CapabilitySchema* schema = rec->descriptor.find(capability);
    if (!schema) throw Error("UnknownCapability", module_id + " does not offer " + capability);
    if (!rec->live()) throw StepError(StepErrc::NoProvider, module_id + " is " + to_string(rec->status));

    Value::Record audit{{"event", "module_execute"},
                        {"module_id", module_id},
                        {"module_name", rec->descriptor.module_name},
                        {"capability", capability},
                        {"inputs", inputs}};
    auto journal_outcome = [&](Value::Record extra) {
        for (auto& [k, v] : extra) audit.insert_or_assign(k, std::move(v));
        journal_->append(EntryKind::ModuleEvent, audit);
    };

    bool scalar = schema->role != Role::Planner;
    try {
        Value::Record request = scalar ? coerce_record(inputs, schema->inputs, false) : inputs;
        auto res = dispatcher_.call(module_id, capability, request, std::chrono::milliseconds(schema->default_timeout_ms));
        Value::Record outputs = std::move(res.outputs);
        if (scalar) {
            try {
                outputs = coerce_record(outputs, schema->outputs, true);
            } catch (const CoercionError& e) {
                throw StepError(StepErrc::SchemaViolation, e.what());
            }
        }
        journal_outcome({{"outputs", outputs}, {"elapsed_ms", res.elapsed_ms}});
        return outputs;
    } catch (const Error& e) {
        if (dynamic_cast<const JournalError*>(&e)) throw;
        journal_outcome({{"error", Value::Record{{"code", e.code()}, {"detail", e.detail()}}}});
        throw;
    }
}

}  // namespace aeos
