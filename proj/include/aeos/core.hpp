// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// The running orchestrator. Owns the registry, the dispatcher and the
// journal; drives one runner thread per RUNNING campaign.
//
// Every campaign mutation is a journal append followed by apply() on the
// in-memory CoreState, done under one lock so memory never runs ahead of
// the durable log.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "aeos/campaign.hpp"
#include "aeos/clock.hpp"
#include "aeos/dispatcher.hpp"
#include "aeos/journal.hpp"
#include "aeos/persistence.hpp"
#include "aeos/registry.hpp"

namespace aeos {

struct CoreOptions {
    /// Directory holding the journal. Ignored when `store` is set; when both
    /// are empty the journal lives in memory.
    std::filesystem::path data_dir;
    std::shared_ptr<JournalStore> store;
    /// Defaults to the system clock. Must outlive the core.
    const Clock* clock = nullptr;
    bool sweeper = true;
    std::chrono::milliseconds sweep_interval{50};
    bool fsync = true;
};

/// One entry of the live event stream. seq is the journal seq.
struct ApiEvent {
    std::uint64_t seq = 0;
    std::string type;
    Value::Record body;

    Value to_value() const;
};

/// Every journal entry maps to exactly one event, so a client tracking seq
/// sees a gap-free sequence.
ApiEvent to_api_event(const JournalEntry& e);

/// Compact listing row: id, name, status, counts and the best result.
Value campaign_summary(const CampaignState& c);

class Core {
public:
    explicit Core(CoreOptions options = {});
    /// Pauses running campaigns at their next boundary, then closes every
    /// module connection.
    ~Core();

    Core(const Core&) = delete;
    Core& operator=(const Core&) = delete;

    ModuleRegistry& registry() noexcept { return registry_; }
    Dispatcher& dispatcher() noexcept { return dispatcher_; }
    Journal& journal() noexcept { return *journal_; }
    const Clock& clock() const noexcept { return clock_; }
    /// Torn-tail and recovery notes from startup.
    const std::vector<std::string>& recovery_notes() const noexcept { return notes_; }

    struct Created {
        CampaignState campaign;
        Violations warnings;
    };
    /// Parses and compiles a spec, then journals it as a DRAFT. Throws
    /// CampaignError(ValidationFailed) carrying every violation.
    Created create_campaign(const Value& raw_spec);
    Created create_campaign(CampaignSpec spec);

    /// start, pause, resume or abort. Pause waits for the in-flight
    /// experiment to finish; abort cancels it.
    CampaignState control(const std::string& campaign_id, ControlAction action);

    std::vector<CampaignState> list_campaigns() const;
    CampaignState campaign(const std::string& campaign_id) const;
    std::vector<ExperimentRecord> query(const std::string& campaign_id, const ExperimentQuery& q) const;
    std::string export_campaign(const std::string& campaign_id, ExportFormat format) const;
    CoreState snapshot() const;

    /// Runs one capability on a specific module outside any campaign and
    /// journals the call for audit. Throws RegistryError(UnknownModule),
    /// CoercionError, StepError.
    Value::Record manual_execute(const std::string& module_id, const std::string& capability,
                                 const Value::Record& inputs);

    /// Blocks until the campaign is no longer RUNNING. False on timeout.
    bool wait_settled(const std::string& campaign_id, std::chrono::milliseconds timeout);

private:
    struct Runner {
        std::jthread thread;
        std::atomic<bool> pause{false};
    };
    class RunnerContext;

    JournalEntry record(EntryKind kind, Value::Record body);
    void record_module_event(const RegistryEvent& ev);
    void recover(Recovery rec);
    void spawn_runner(const std::string& id);
    void run_campaign(std::stop_token stop, std::string id, Runner* self);
    void finish_campaign(const std::string& id, CampaignStatus status, StopReason reason, const PlannerState* planner,
                         const std::string& note);
    std::unique_ptr<Runner> take_runner(const std::string& id);
    const CampaignState& require(const std::string& id) const;

    SystemClock system_clock_;
    const Clock& clock_;
    ModuleRegistry registry_;
    Dispatcher dispatcher_;
    std::unique_ptr<Journal> journal_;
    std::vector<std::string> notes_;
    std::atomic<bool> closing_{false};

    mutable std::mutex state_mu_;
    std::condition_variable state_cv_;
    CoreState state_;

    // Serializes control operations against each other.
    std::mutex control_mu_;
    std::mutex runners_mu_;
    std::map<std::string, std::unique_ptr<Runner>> runners_;

    std::jthread sweeper_;
};

}  // namespace aeos
