// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every tolerance and time limit is a constant below.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "aeos/core.hpp"
#include "aeos/module_server.hpp"
#include "generators.hpp"
#include "oracle_values.hpp"
#include "sim_lab.hpp"
#include "temp_dir.hpp"

using namespace aeos;
using namespace std::chrono_literals;
using Steady = std::chrono::steady_clock;

namespace {

constexpr auto kCodecBudget = 5s;
constexpr int kCodecCases = 1000;
constexpr int kMaxNesting = 4;
constexpr auto kGridBudget = 10s;
constexpr auto kComparisonBudget = 30s;
constexpr int kComparisonSeeds = 20;
constexpr double kTargetFraction = 0.95;
constexpr std::int64_t kHeartbeatMs = 200;
constexpr auto kOfflineLimit = 700ms;
constexpr std::int64_t kRecoveryBudget = 20;
constexpr std::size_t kCrashAfter = 7;
constexpr auto kCrashWatchLimit = 20s;

struct Result {
    bool pass = false;
    std::string detail;
};

double elapsed_s(Steady::time_point t0) { return std::chrono::duration<double>(Steady::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CoreOptions quiet_memory_core(const aeos::Clock* clock = nullptr) {
    CoreOptions o;
    o.clock = clock;
    o.sweeper = false;
    return o;
}

CampaignState run_campaign(Core& core, CampaignSpec spec, std::chrono::milliseconds limit = 60s) {
    auto id = core.create_campaign(std::move(spec)).campaign.spec.campaign_id;
    core.control(id, ControlAction::Start);
    if (!core.wait_settled(id, limit)) throw std::runtime_error("campaign " + id + " did not settle");
    return core.campaign(id);
}

using Trajectory = std::vector<std::pair<Value::Record, double>>;

Trajectory done_sequence(const CampaignState& c) {
    Trajectory t;
    for (const auto& e : c.experiments)
        if (e.status == ExperimentStatus::Done) t.emplace_back(e.params, *e.objective);
    return t;
}

PlannerConfig planner(PlannerConfig::Kind kind, std::uint64_t seed, double epsilon = 0.0) {
    PlannerConfig p;
    p.kind = kind;
    p.seed = seed;
    p.epsilon = epsilon;
    return p;
}

double median(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

//---------------------------------------------------------------------------//

Result ac1() {
    const Octets expected{0x41, 0x45, 0x50, 0x31, 0x01, 0x04, 0x00, 0x02, 0x00, 0x00, 0x00, 0x7B, 0x7D};
    Octets got = encode_message(HeartbeatAckMsg{});
    if (got != expected) {
        std::string hex;
        for (auto b : got) hex += fmt("%02X ", b);
        return {false, "encoded " + hex};
    }
    auto d = decode_message(got);
    bool ok = d.consumed == expected.size() && std::holds_alternative<HeartbeatAckMsg>(d.message);
    return {ok, ok ? "13 octets match; decode inverts" : "decode did not invert"};
}

Result ac2() {
    auto t0 = Steady::now();
    gen::Rng r(20261017);
    int mismatches = 0, max_depth = 0;
    for (int i = 0; i < kCodecCases; ++i) {
        Message m = gen::message(r);
        max_depth = std::max(max_depth, depth_of(Value(to_payload(m))));
        auto d = decode_message(encode_message(m));
        if (!(d.message == m)) ++mismatches;
    }
    int rejected = 0, accepted = 0, foreign = 0;
    for (int i = 0; i < kCodecCases; ++i) {
        Octets bytes = gen::mutate(r, encode_message(gen::message(r)));
        try {
            decode_message(bytes);
            ++accepted;
        } catch (const CodecError&) {
            ++rejected;
        } catch (...) {
            ++foreign;
        }
    }
    double secs = elapsed_s(t0);
    bool ok = mismatches == 0 && foreign == 0 && max_depth <= kMaxNesting &&
              secs < std::chrono::duration<double>(kCodecBudget).count();
    return {ok, fmt("%d/%d round-trips exact (max nesting %d); mutated: %d rejected, %d accepted, %d non-codec errors; "
                    "%.3fs",
                    kCodecCases - mismatches, kCodecCases, max_depth, rejected, accepted, foreign, secs)};
}

Result ac3() {
    auto t0 = Steady::now();
    Core core(quiet_memory_core());
    auto lab = sim::SimLab::attach(core.dispatcher());
    auto spec = sim::sim_campaign(planner(PlannerConfig::Kind::Grid, 0), std::nullopt, 21);
    auto c = run_campaign(core, spec);
    double secs = elapsed_s(t0);

    // Brute force over the same grid, straight from the formulas.
    std::uint64_t best_flat = 0;
    double best = -1;
    for (std::uint64_t f = 0; f < grid_size(spec.space); ++f) {
        auto p = grid_point(spec.space, f);
        double v = sim::objective_at(p.at("x").as_real(), p.at("y").as_real());
        if (v > best) best = v, best_flat = f;
    }
    auto argmax = grid_point(spec.space, best_flat);

    bool ok = c.status == CampaignStatus::Completed && c.done_count() == 441 && c.experiments.size() == 441 &&
              c.best_index && c.experiments[*c.best_index].params == argmax && best_flat == oracle::kGridArgmaxFlat &&
              secs < std::chrono::duration<double>(kGridBudget).count();
    std::string got = c.best_index ? canonical_encode(Value(c.experiments[*c.best_index].params)) : "none";
    return {ok, fmt("%zu/441 DONE; best %s, argmax %s; %.3fs", c.done_count(), got.c_str(),
                    canonical_encode(Value(argmax)).c_str(), secs)};
}

Result ac4() {
    auto t0 = Steady::now();
    auto space = sim::sim_campaign({}, 1).space;
    double max = -1;
    for (std::uint64_t f = 0; f < grid_size(space); ++f) {
        auto p = grid_point(space, f);
        max = std::max(max, sim::objective_at(p.at("x").as_real(), p.at("y").as_real()));
    }
    const double target = kTargetFraction * max;

    Core core(quiet_memory_core());
    auto lab = sim::SimLab::attach(core.dispatcher());
    auto lengths = [&](PlannerConfig::Kind kind, double eps) {
        std::vector<int> out;
        for (int seed = 1; seed <= kComparisonSeeds; ++seed) {
            auto spec = sim::sim_campaign(planner(kind, static_cast<std::uint64_t>(seed), eps), std::nullopt, 21);
            spec.stop.target_value = target;
            auto c = run_campaign(core, spec);
            out.push_back(c.stop_reason == StopReason::TargetReached ? static_cast<int>(c.experiments.size()) : 1 << 30);
        }
        return out;
    };
    auto rnd = lengths(PlannerConfig::Kind::Random, 0.0);
    auto eg = lengths(PlannerConfig::Kind::EpsilonGreedy, oracle::kEpsilon);
    double secs = elapsed_s(t0);
    double m_rnd = median(rnd), m_eg = median(eg);
    bool matches_oracle = std::equal(rnd.begin(), rnd.end(), oracle::kRandomRunLengths.begin()) &&
                          std::equal(eg.begin(), eg.end(), oracle::kEpsGreedyRunLengths.begin());
    bool ok = m_eg < m_rnd && secs < std::chrono::duration<double>(kComparisonBudget).count();
    return {ok, fmt("median experiments to %.2f x max: epsilon_greedy %.1f, random %.1f (%s independent oracle); %.3fs",
                    kTargetFraction, m_eg, m_rnd, matches_oracle ? "identical to" : "DIFFERS from", secs)};
}

Result ac5() {
    CoreOptions o;
    o.sweeper = true;
    Core core(o);
    ModuleServer server(core.dispatcher(), "127.0.0.1", 0);
    sim::TcpModuleClient device("127.0.0.1", server.port());
    auto ack = device.register_module(sim::device_descriptor("ac5-device", kHeartbeatMs));
    if (!ack.ok) return {false, "registration refused"};
    device.serve({{"measure_trace", sim::device_handler()}}, 0ms);

    // Beat by hand so the moment of the last heartbeat is known exactly.
    Steady::time_point last;
    for (int i = 0; i < 5; ++i) {
        last = Steady::now();
        device.send(HeartbeatMsg{ack.module_id, "READY"});
        std::this_thread::sleep_for(std::chrono::milliseconds(kHeartbeatMs));
    }
    auto before = core.registry().find(ack.module_id);
    if (!before || !before->live()) return {false, "module not live while beating"};

    Steady::time_point offline_at{};
    while (Steady::now() - last < 3s) {
        auto rec = core.registry().find(ack.module_id);
        if (rec && rec->status == ModuleStatus::Offline) {
            offline_at = Steady::now();
            break;
        }
        std::this_thread::sleep_for(1ms);
    }
    if (offline_at == Steady::time_point{}) return {false, "module never went OFFLINE"};
    auto took = std::chrono::duration_cast<std::chrono::milliseconds>(offline_at - last);

    auto spec = sim::sim_campaign({}, 1);
    std::string code;
    try {
        execute_step(spec.steps[0], {{"x", 0.3}, {"y", 0.7}}, core.dispatcher());
        code = "succeeded";
    } catch (const StepError& e) {
        code = e.code();
    }
    bool ok = took < kOfflineLimit && code == "NoProvider";
    return {ok, fmt("OFFLINE %lld ms after the last heartbeat (limit %lld); dependent step: %s",
                    static_cast<long long>(took.count()), static_cast<long long>(kOfflineLimit.count()), code.c_str())};
}

CampaignSpec recovery_spec() {
    return sim::sim_campaign(planner(PlannerConfig::Kind::EpsilonGreedy, 2026, oracle::kEpsilon), kRecoveryBudget, 21);
}

/// Child side of AC6: run the campaign on a file journal; the device hangs on
/// call k+1 so the process is killed with that experiment in flight.
int crash_child(const std::string& dir, std::size_t k) {
    CoreOptions o;
    o.data_dir = dir;
    o.sweeper = false;
    Core core(o);
    auto calls = std::make_shared<std::atomic<std::size_t>>(0);
    auto base = sim::device_handler();
    auto device = sim::LocalModule::create(sim::device_descriptor(), {{"measure_trace", [=](const Value::Record& in) {
                                                                           if (++*calls > k) std::this_thread::sleep_for(1h);
                                                                           return base(in);
                                                                       }}});
    auto analyzer = sim::LocalModule::create(sim::analyzer_descriptor(), {{"score_trace", sim::analyzer_handler()}});
    device->connect(core.dispatcher());
    analyzer->connect(core.dispatcher());
    auto id = core.create_campaign(recovery_spec()).campaign.spec.campaign_id;
    core.control(id, ControlAction::Start);
    std::this_thread::sleep_for(1h);
    return 0;
}

std::pair<std::size_t, std::size_t> journal_progress(const std::filesystem::path& file) {
    std::ifstream in(file);
    std::string line;
    std::size_t appended = 0, done = 0;
    while (std::getline(in, line)) {
        try {
            auto e = JournalEntry::decode(line);
            if (e.kind == EntryKind::ExperimentAppended) ++appended;
            if (e.kind == EntryKind::ExperimentUpdated && Value(e.body).at("experiment").at("status").as_text() == "DONE")
                ++done;
        } catch (const std::exception&) {
            // A line still being written.
        }
    }
    return {appended, done};
}

Result ac6(const char* self) {
    // Uninterrupted reference run.
    Trajectory reference;
    {
        Core core(quiet_memory_core());
        auto lab = sim::SimLab::attach(core.dispatcher());
        reference = done_sequence(run_campaign(core, recovery_spec()));
    }

    sim::TempDir dir;
    pid_t pid = fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
        execl(self, self, "--crash-child", dir.path().c_str(), std::to_string(kCrashAfter).c_str(),
              static_cast<char*>(nullptr));
        _exit(127);
    }
    auto file = dir.path() / kJournalFileName;
    auto t0 = Steady::now();
    std::pair<std::size_t, std::size_t> progress{0, 0};
    while (Steady::now() - t0 < kCrashWatchLimit) {
        progress = journal_progress(file);
        if (progress.second >= kCrashAfter && progress.first > kCrashAfter) break;
        std::this_thread::sleep_for(2ms);
    }
    kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    if (progress.second != kCrashAfter || progress.first != kCrashAfter + 1)
        return {false, fmt("child reached %zu appended / %zu done", progress.first, progress.second)};

    CoreOptions o;
    o.data_dir = dir.path();
    o.sweeper = false;
    Core core(o);
    auto recovered = core.campaign("c-1");
    bool paused = recovered.status == CampaignStatus::Paused;
    std::size_t done = recovered.done_count();
    auto lab = sim::SimLab::attach(core.dispatcher());
    core.control("c-1", ControlAction::Resume);
    if (!core.wait_settled("c-1", 60s)) return {false, "resumed campaign did not settle"};
    auto finished = core.campaign("c-1");
    bool same = done_sequence(finished) == reference;
    bool ok = paused && done == kCrashAfter && finished.status == CampaignStatus::Completed && same;
    return {ok, fmt("killed after %zu DONE; recovered %s with %zu DONE; resumed run %s the uninterrupted one "
                    "(%zu results)",
                    kCrashAfter, to_string(recovered.status), done, same ? "matches" : "DIFFERS from",
                    done_sequence(finished).size())};
}

std::string deterministic_export(ExportFormat format) {
    ManualClock clock(1'700'000'000'000, 1);
    Core core(quiet_memory_core(&clock));
    auto lab = sim::SimLab::attach(core.dispatcher());
    lab.device->fail_next(2, "Transient");
    auto spec = sim::sim_campaign(planner(PlannerConfig::Kind::EpsilonGreedy, 7, oracle::kEpsilon), 60, 21);
    spec.error_policy = {ErrorPolicy::Kind::Retry, 1};
    auto c = run_campaign(core, spec);
    return core.export_campaign(c.spec.campaign_id, format);
}

Result ac7() {
    auto a = deterministic_export(ExportFormat::Json);
    auto b = deterministic_export(ExportFormat::Json);
    auto ca = deterministic_export(ExportFormat::Csv);
    auto cb = deterministic_export(ExportFormat::Csv);
    bool ok = a == b && ca == cb && !a.empty();
    return {ok, fmt("JSON exports %s (%zu bytes); CSV exports %s", a == b ? "byte-identical" : "DIFFER", a.size(),
                    ca == cb ? "byte-identical" : "DIFFER")};
}

Result ac8() {
    auto spec = sim::sim_campaign(planner(PlannerConfig::Kind::Grid, 0), 2, 2);
    spec.stop.target_value = 0.5;
    spec.stop.max_wall_ms = 10;
    auto s = CampaignState::fresh(spec);
    s.started_ms = 0;
    for (int i = 0; i < 4; ++i) {
        ExperimentRecord e;
        e.index = i;
        e.status = ExperimentStatus::Done;
        e.objective = 0.9;
        s.experiments.push_back(e);
        s.note_finished(static_cast<std::size_t>(i));
    }
    s.planner.grid_cursor = 4;  // every grid point proposed

    std::vector<std::string> ladder;
    auto step = [&](std::optional<StopReason> expect) {
        auto got = evaluate_stop(s, 1000).reason;
        ladder.push_back(got ? to_string(*got) : "none");
        return got == expect;
    };
    bool ok = step(StopReason::BudgetExhausted);
    s.spec.stop.max_experiments.reset();
    ok &= step(StopReason::TargetReached);
    s.spec.stop.target_value.reset();
    ok &= step(StopReason::WallClockExceeded);
    s.spec.stop.max_wall_ms.reset();
    ok &= step(StopReason::PlannerExhausted);
    s.planner.grid_cursor = 0;
    ok &= step(std::nullopt);

    // End to end: budget and target are both met by the first experiment.
    Core core(quiet_memory_core());
    auto lab = sim::SimLab::attach(core.dispatcher());
    auto both = sim::sim_campaign(planner(PlannerConfig::Kind::Grid, 0), 1, 2);
    both.stop.target_value = -1.0;
    auto c = run_campaign(core, both);
    ok &= c.stop_reason == StopReason::BudgetExhausted;

    std::string joined;
    for (const auto& l : ladder) joined += (joined.empty() ? "" : " > ") + l;
    return {ok, joined + "; live run with budget and target both met stopped with " +
                    (c.stop_reason ? to_string(*c.stop_reason) : "none")};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc == 4 && std::strcmp(argv[1], "--crash-child") == 0)
        return crash_child(argv[2], static_cast<std::size_t>(std::stoul(argv[3])));

    const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},
        {"AC5", ac5}, {"AC6", [&] { return ac6("/proc/self/exe"); }}, {"AC7", ac7}, {"AC8", ac8},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failed;
        std::cout << name << " " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << std::endl;
    }
    return failed ? 1 : 0;
}
