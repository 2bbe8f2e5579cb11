// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "aeos/core.hpp"
#include "sim_lab.hpp"
#include "temp_dir.hpp"

using namespace aeos;
using namespace std::chrono_literals;

namespace {

CoreOptions memory_options(std::shared_ptr<JournalStore> store, const Clock* clock = nullptr) {
    CoreOptions o;
    o.store = std::move(store);
    o.clock = clock;
    o.sweeper = false;
    return o;
}

CampaignErrc campaign_errc(const std::function<void()>& f, Violations* out = nullptr) {
    try {
        f();
    } catch (const CampaignError& e) {
        if (out) *out = e.violations();
        return e.errc();
    }
    ADD_FAILURE() << "no CampaignError";
    return CampaignErrc::NotRunning;
}

using Trajectory = std::vector<std::pair<Value::Record, double>>;

Trajectory done_sequence(const CampaignState& c) {
    Trajectory t;
    for (const auto& e : c.experiments)
        if (e.status == ExperimentStatus::Done) t.emplace_back(e.params, *e.objective);
    return t;
}

PlannerConfig random_planner(std::uint64_t seed) {
    PlannerConfig p;
    p.kind = PlannerConfig::Kind::Random;
    p.seed = seed;
    return p;
}

struct CoreTest : ::testing::Test {
    ManualClock clock{1'700'000'000'000, 1};
    std::shared_ptr<MemoryJournalStore> store = std::make_shared<MemoryJournalStore>();
    std::unique_ptr<Core> core = std::make_unique<Core>(memory_options(store, &clock));
    sim::SimLab lab = sim::SimLab::attach(core->dispatcher());

    CampaignState run(CampaignSpec spec) {
        auto id = core->create_campaign(std::move(spec)).campaign.spec.campaign_id;
        core->control(id, ControlAction::Start);
        EXPECT_TRUE(core->wait_settled(id, 10s));
        return core->campaign(id);
    }
};

}  // namespace

TEST_F(CoreTest, CreateAssignsIdsAndJournalsDraft) {
    auto a = core->create_campaign(sim::sim_campaign({}, 5, 3));
    auto b = core->create_campaign(sim::sim_campaign({}, 5, 3));
    EXPECT_EQ(a.campaign.spec.campaign_id, "c-1");
    EXPECT_EQ(b.campaign.spec.campaign_id, "c-2");
    EXPECT_EQ(a.campaign.status, CampaignStatus::Draft);
    EXPECT_TRUE(a.warnings.empty());
    EXPECT_EQ(core->list_campaigns().size(), 2u);

    auto dup = sim::sim_campaign({}, 5, 3);
    dup.campaign_id = "c-1";
    Violations v;
    EXPECT_EQ(campaign_errc([&] { core->create_campaign(dup); }, &v), CampaignErrc::ValidationFailed);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].code, "DuplicateCampaign");
}

TEST_F(CoreTest, CreateRejectsInvalidSpecsWithViolations) {
    auto bad = sim::sim_campaign({}, std::nullopt, 3);
    bad.stop = {};
    bad.steps[1].inputs.clear();
    Violations v;
    EXPECT_EQ(campaign_errc([&] { core->create_campaign(bad); }, &v), CampaignErrc::ValidationFailed);
    EXPECT_GE(v.size(), 2u);
    EXPECT_EQ(campaign_errc([&] { core->create_campaign(Value{"nonsense"}); }), CampaignErrc::ValidationFailed);
    EXPECT_TRUE(core->list_campaigns().empty());
}

TEST_F(CoreTest, CreateWarnsWhenNoProviderIsLive) {
    auto spec = sim::sim_campaign({}, 5, 3);
    spec.steps[0].capability = "mystery";
    spec.steps[1].inputs = {{"trace", Binding::lit(Value::List{0.1, 0.2})}};
    auto created = core->create_campaign(spec);
    ASSERT_FALSE(created.warnings.empty());
    EXPECT_EQ(created.warnings[0].code, "UnknownCapability");
}

TEST_F(CoreTest, GridCampaignCompletes) {
    auto c = run(sim::sim_campaign({}, std::nullopt, 5));
    EXPECT_EQ(c.status, CampaignStatus::Completed);
    EXPECT_EQ(c.stop_reason, StopReason::PlannerExhausted);
    EXPECT_EQ(c.experiments.size(), 25u);
    EXPECT_EQ(c.done_count(), 25u);
    ASSERT_TRUE(c.best_index);
    EXPECT_EQ(c.experiments[*c.best_index].params, (Value::Record{{"x", 0.25}, {"y", 0.75}}));
    EXPECT_EQ(lab.device->calls(), 25);
    EXPECT_EQ(c.experiments[0].provenance.size(), 2u);
    EXPECT_EQ(c.experiments[0].provenance[0].module_id, "m-1");
}

TEST_F(CoreTest, BudgetStopsRandomCampaign) {
    auto c = run(sim::sim_campaign(random_planner(4), 7));
    EXPECT_EQ(c.stop_reason, StopReason::BudgetExhausted);
    EXPECT_EQ(c.done_count(), 7u);
}

TEST_F(CoreTest, InvalidTransitionsAreRejected) {
    auto id = core->create_campaign(sim::sim_campaign({}, 3, 3)).campaign.spec.campaign_id;
    EXPECT_EQ(campaign_errc([&] { core->control(id, ControlAction::Abort); }), CampaignErrc::InvalidTransition);
    EXPECT_EQ(campaign_errc([&] { core->control(id, ControlAction::Pause); }), CampaignErrc::InvalidTransition);
    EXPECT_EQ(campaign_errc([&] { core->control(id, ControlAction::Resume); }), CampaignErrc::InvalidTransition);
    EXPECT_EQ(campaign_errc([&] { core->control("c-99", ControlAction::Start); }), CampaignErrc::UnknownCampaign);
    core->control(id, ControlAction::Start);
    ASSERT_TRUE(core->wait_settled(id, 10s));
    EXPECT_EQ(campaign_errc([&] { core->control(id, ControlAction::Start); }), CampaignErrc::InvalidTransition);
    EXPECT_EQ(campaign_errc([&] { core->control(id, ControlAction::Abort); }), CampaignErrc::InvalidTransition);
}

TEST_F(CoreTest, PauseWaitsForBoundaryAndResumeContinues) {
    lab.device->set_mode(sim::LocalModule::Mode::Async);
    auto id = core->create_campaign(sim::sim_campaign({}, std::nullopt, 21)).campaign.spec.campaign_id;
    core->control(id, ControlAction::Start);
    for (int i = 0; i < 1000 && core->campaign(id).experiments.size() < 3; ++i) std::this_thread::sleep_for(1ms);
    auto paused = core->control(id, ControlAction::Pause);
    EXPECT_EQ(paused.status, CampaignStatus::Paused);
    for (const auto& e : paused.experiments) EXPECT_TRUE(is_terminal(e.status));
    auto n = paused.experiments.size();
    std::this_thread::sleep_for(20ms);
    EXPECT_EQ(core->campaign(id).experiments.size(), n);

    core->control(id, ControlAction::Resume);
    ASSERT_TRUE(core->wait_settled(id, 10s));
    auto c = core->campaign(id);
    EXPECT_EQ(c.status, CampaignStatus::Completed);
    EXPECT_EQ(c.done_count(), 441u);
}

TEST_F(CoreTest, AbortCancelsInFlightExperiment) {
    lab.device->set_mode(sim::LocalModule::Mode::Silent);
    auto id = core->create_campaign(sim::sim_campaign({}, 5, 3)).campaign.spec.campaign_id;
    core->control(id, ControlAction::Start);
    for (int i = 0; i < 200 && core->campaign(id).experiments.empty(); ++i) std::this_thread::sleep_for(5ms);
    auto c = core->control(id, ControlAction::Abort);
    EXPECT_EQ(c.status, CampaignStatus::Aborted);
    EXPECT_EQ(c.stop_reason, StopReason::Aborted);
    ASSERT_EQ(c.experiments.size(), 1u);
    EXPECT_EQ(c.experiments[0].status, ExperimentStatus::Failed);
    ASSERT_TRUE(c.experiments[0].failure);
}

TEST_F(CoreTest, AbortPausedCampaign) {
    lab.device->set_mode(sim::LocalModule::Mode::Async);
    auto id = core->create_campaign(sim::sim_campaign({}, std::nullopt, 21)).campaign.spec.campaign_id;
    core->control(id, ControlAction::Start);
    core->control(id, ControlAction::Pause);
    auto c = core->control(id, ControlAction::Abort);
    EXPECT_EQ(c.status, CampaignStatus::Aborted);
    for (const auto& e : c.experiments) EXPECT_TRUE(is_terminal(e.status));
}

TEST_F(CoreTest, FailingDeviceUnderAbortPolicyFailsCampaign) {
    lab.device->set_mode(sim::LocalModule::Mode::Fail, "DeviceJam", "stuck");
    auto c = run(sim::sim_campaign({}, 5, 3));
    EXPECT_EQ(c.status, CampaignStatus::Failed);
    EXPECT_EQ(c.stop_reason, StopReason::FatalError);
    ASSERT_EQ(c.experiments.size(), 1u);
    EXPECT_EQ(c.experiments[0].failure->code, "ModuleError");
}

TEST_F(CoreTest, RecoveryRestoresPausedStateAndReplaysIdentically) {
    auto spec = sim::sim_campaign(random_planner(11), 12);
    auto full = run(spec);
    ASSERT_EQ(full.done_count(), 12u);
    auto entries = core->journal().entries();
    core.reset();

    // Cut the journal just after the (k+1)-th experiment was appended.
    const std::size_t k = 5;
    std::string prefix;
    std::size_t appended = 0;
    for (const auto& e : entries) {
        prefix += e.encode() + "\n";
        if (e.kind == EntryKind::ExperimentAppended && ++appended == k + 1) break;
    }
    auto cut = std::make_shared<MemoryJournalStore>(prefix);
    core = std::make_unique<Core>(memory_options(cut, &clock));
    EXPECT_FALSE(core->recovery_notes().empty());
    auto recovered = core->campaign("c-1");
    EXPECT_EQ(recovered.status, CampaignStatus::Paused);
    EXPECT_EQ(recovered.done_count(), k);
    ASSERT_EQ(recovered.experiments.size(), k + 1);
    EXPECT_EQ(recovered.experiments[k].status, ExperimentStatus::Failed);
    EXPECT_EQ(recovered.experiments[k].failure->code, "interrupted");

    lab = sim::SimLab::attach(core->dispatcher());
    core->control("c-1", ControlAction::Resume);
    ASSERT_TRUE(core->wait_settled("c-1", 10s));
    auto resumed = core->campaign("c-1");
    EXPECT_EQ(resumed.status, CampaignStatus::Completed);
    EXPECT_EQ(done_sequence(resumed), done_sequence(full));
}

TEST_F(CoreTest, ReopeningCleanJournalChangesNothing) {
    run(sim::sim_campaign({}, 4, 3));
    auto before = core->snapshot();
    auto head = core->journal().head();
    core.reset();
    core = std::make_unique<Core>(memory_options(store, &clock));
    EXPECT_TRUE(core->recovery_notes().empty());
    auto after = core->snapshot();
    EXPECT_EQ(after.campaigns.at("c-1").to_value(), before.campaigns.at("c-1").to_value());
    // Only module events were added by the shutdown.
    for (const auto& e : core->journal().since(head)) EXPECT_EQ(e.kind, EntryKind::ModuleEvent);
    EXPECT_EQ(core->create_campaign(sim::sim_campaign({}, 4, 3)).campaign.spec.campaign_id, "c-2");
}

TEST_F(CoreTest, FileBackedCoreSurvivesRestart) {
    sim::TempDir dir;
    CoreOptions o;
    o.data_dir = dir.path();
    o.clock = &clock;
    o.sweeper = false;
    o.fsync = false;
    {
        Core c(o);
        auto lab2 = sim::SimLab::attach(c.dispatcher());
        auto id = c.create_campaign(sim::sim_campaign({}, 3, 3)).campaign.spec.campaign_id;
        c.control(id, ControlAction::Start);
        ASSERT_TRUE(c.wait_settled(id, 10s));
    }
    Core c(o);
    EXPECT_EQ(c.campaign("c-1").done_count(), 3u);
    EXPECT_EQ(export_from_journal(dir.path(), "c-1", ExportFormat::Csv), c.export_campaign("c-1", ExportFormat::Csv));
}

TEST_F(CoreTest, EveryJournalEntryMapsToOneEvent) {
    run(sim::sim_campaign({}, 2, 3));
    auto entries = core->journal().entries();
    std::uint64_t expect = 1;
    std::vector<std::string> types;
    for (const auto& e : entries) {
        auto ev = to_api_event(e);
        EXPECT_EQ(ev.seq, expect++);
        types.push_back(ev.type);
    }
    std::vector<std::string> head(types.begin(), types.begin() + 4);
    EXPECT_EQ(head, (std::vector<std::string>{"module_registered", "module_registered", "campaign_status",
                                              "campaign_status"}));
    EXPECT_EQ(types[4], "experiment_started");
    EXPECT_EQ(types[5], "experiment_done");
    EXPECT_EQ(types.back(), "campaign_status");
    auto created = to_api_event(entries[2]).to_value();
    EXPECT_EQ(created.at("body").at("status").as_text(), "DRAFT");
}

TEST_F(CoreTest, FailedExperimentMapsToFailedEvent) {
    lab.device->set_mode(sim::LocalModule::Mode::Fail);
    run(sim::sim_campaign({}, 2, 3));
    bool seen = false;
    for (const auto& e : core->journal().entries()) seen |= to_api_event(e).type == "experiment_failed";
    EXPECT_TRUE(seen);
}

TEST_F(CoreTest, ManualExecuteIsJournaled) {
    auto out = core->manual_execute("m-1", "measure_trace", {{"x", 0.3}, {"y", 0.7}});
    EXPECT_EQ(out.at("trace").as_list().size(), 32u);
    auto last = core->journal().entries().back();
    EXPECT_EQ(last.kind, EntryKind::ModuleEvent);
    EXPECT_EQ(last.body.at("event"), Value{"module_execute"});
    EXPECT_TRUE(last.body.count("outputs"));

    EXPECT_THROW(core->manual_execute("m-1", "measure_trace", {{"x", "left"}, {"y", 0.7}}), CoercionError);
    EXPECT_TRUE(core->journal().entries().back().body.count("error"));
    EXPECT_THROW(core->manual_execute("m-9", "measure_trace", {}), RegistryError);
    EXPECT_THROW(core->manual_execute("m-1", "nothing", {}), Error);
}

TEST_F(CoreTest, SummaryCarriesBestResult) {
    auto c = run(sim::sim_campaign({}, std::nullopt, 3));
    auto s = campaign_summary(c);
    EXPECT_EQ(s.at("status").as_text(), "COMPLETED");
    EXPECT_EQ(s.at("done_count").as_int(), 9);
    EXPECT_EQ(s.at("best_params"), Value(Value::Record{{"x", 0.5}, {"y", 0.5}}));
}

TEST_F(CoreTest, WaitSettledTimesOut) {
    lab.device->set_mode(sim::LocalModule::Mode::Silent);
    auto id = core->create_campaign(sim::sim_campaign({}, 5, 3)).campaign.spec.campaign_id;
    core->control(id, ControlAction::Start);
    EXPECT_FALSE(core->wait_settled(id, 30ms));
    core->control(id, ControlAction::Abort);
    EXPECT_TRUE(core->wait_settled(id, 10ms));
}
