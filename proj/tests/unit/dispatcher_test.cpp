// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "aeos/dispatcher.hpp"
#include "sim_lab.hpp"

using namespace aeos;
using namespace std::chrono_literals;

namespace {

struct DispatcherTest : ::testing::Test {
    ManualClock clock{5'000};
    ModuleRegistry reg{clock};
    Dispatcher disp{reg};

    std::shared_ptr<sim::LocalModule> device() {
        return sim::LocalModule::create(sim::device_descriptor(), {{"measure_trace", sim::device_handler()}});
    }
};

StepErrc step_errc(const std::function<void()>& f, std::string* module_code = nullptr) {
    try {
        f();
    } catch (const StepError& e) {
        if (module_code) *module_code = e.module_code();
        return e.errc();
    }
    ADD_FAILURE() << "no StepError";
    return StepErrc::ModuleError;
}

/// Sink that records everything and never answers.
struct Recorder : FrameSink {
    std::vector<Message> sent;
    bool closed = false;
    void send(const Message& m) override { sent.push_back(m); }
    void close() override { closed = true; }
};

}  // namespace

TEST_F(DispatcherTest, RegisterAndCall) {
    auto m = device();
    std::string id = m->connect(disp);
    EXPECT_EQ(id, "m-1");
    auto r = disp.call(id, "measure_trace", {{"x", 0.3}, {"y", 0.7}, {"noise_sigma", 0.0}}, 1s);
    EXPECT_EQ(r.outputs.at("trace").as_list().size(), 32u);
    EXPECT_EQ(m->calls(), 1);
}

TEST_F(DispatcherTest, HeartbeatIsAcknowledged) {
    auto m = device();
    m->connect(disp);
    m->heartbeat("BUSY");
    auto got = m->received();
    EXPECT_TRUE(std::holds_alternative<HeartbeatAckMsg>(got.back()));
    EXPECT_EQ(reg.find("m-1")->status, ModuleStatus::Busy);
}

TEST_F(DispatcherTest, RefusedRegistrationClosesConnection) {
    auto m = device();
    auto d = sim::device_descriptor().to_value();
    d.as_record()["heartbeat_interval_ms"] = 5;
    auto ack = m->register_raw(disp, d);
    EXPECT_FALSE(ack.ok);
    ASSERT_EQ(ack.violations.size(), 1u);
    EXPECT_EQ(ack.violations[0].at("code").as_text(), "IntervalOutOfRange");
    EXPECT_TRUE(m->closed());
}

TEST_F(DispatcherTest, DuplicateNameAckCarriesViolation) {
    auto a = device(), b = device();
    a->connect(disp);
    auto ack = b->register_raw(disp, sim::device_descriptor().to_value());
    EXPECT_FALSE(ack.ok);
    EXPECT_EQ(ack.violations[0].at("code").as_text(), "DuplicateName");
}

TEST_F(DispatcherTest, FirstFrameMustBeRegister) {
    auto sink = std::make_shared<Recorder>();
    auto conn = disp.open(sink);
    disp.receive(conn, HeartbeatMsg{"m-1", "READY"});
    ASSERT_EQ(sink->sent.size(), 1u);
    EXPECT_TRUE(std::holds_alternative<ShutdownMsg>(sink->sent[0]));
    EXPECT_TRUE(sink->closed);
}

TEST_F(DispatcherTest, HeartbeatForAnotherModuleCloses) {
    auto m = device();
    m->connect(disp);
    m->send_to_core(HeartbeatMsg{"m-9", "READY"});
    EXPECT_TRUE(m->closed());
    EXPECT_TRUE(reg.list().empty());
}

TEST_F(DispatcherTest, SecondRegisterFaultsModule) {
    auto m = device();
    m->connect(disp);
    m->send_to_core(RegisterMsg{sim::device_descriptor().to_value()});
    EXPECT_EQ(reg.find("m-1")->status, ModuleStatus::Faulted);
    EXPECT_EQ(step_errc([&] { disp.call("m-1", "measure_trace", {}, 1s); }), StepErrc::NoProvider);
}

TEST_F(DispatcherTest, ModuleErrorCarriesCode) {
    auto m = device();
    m->connect(disp);
    m->set_mode(sim::LocalModule::Mode::Fail, "DeviceJam", "stuck");
    std::string code;
    EXPECT_EQ(step_errc([&] { disp.call("m-1", "measure_trace", {{"x", 0.1}, {"y", 0.1}}, 1s); }, &code),
              StepErrc::ModuleError);
    EXPECT_EQ(code, "DeviceJam");
}

TEST_F(DispatcherTest, SilentModuleTimesOutAndLateAnswerIsIgnored) {
    auto m = device();
    m->connect(disp);
    m->set_mode(sim::LocalModule::Mode::Silent);
    EXPECT_EQ(step_errc([&] { disp.call("m-1", "measure_trace", {}, 50ms); }), StepErrc::Timeout);
    m->send_to_core(ExecuteResultMsg{1, {}, 0});  // late; must not crash or resolve anything
    m->set_mode(sim::LocalModule::Mode::Answer);
    auto r = disp.call("m-1", "measure_trace", {{"x", 0.5}, {"y", 0.5}}, 1s);
    EXPECT_FALSE(r.outputs.empty());
}

TEST_F(DispatcherTest, StopTokenAbortsWait) {
    auto m = device();
    m->connect(disp);
    m->set_mode(sim::LocalModule::Mode::Silent);
    std::stop_source src;
    auto fut = std::async(std::launch::async, [&] {
        return step_errc([&] { disp.call("m-1", "measure_trace", {}, 10s, src.get_token()); });
    });
    std::this_thread::sleep_for(30ms);
    src.request_stop();
    EXPECT_EQ(fut.get(), StepErrc::Aborted);
}

TEST_F(DispatcherTest, DisconnectFailsInFlightCalls) {
    auto m = device();
    m->connect(disp);
    m->set_mode(sim::LocalModule::Mode::Silent);
    auto fut = std::async(std::launch::async, [&] {
        return step_errc([&] { disp.call("m-1", "measure_trace", {}, 10s); });
    });
    std::this_thread::sleep_for(30ms);
    m->disconnect();
    EXPECT_EQ(fut.get(), StepErrc::NoProvider);
    EXPECT_FALSE(reg.find("m-1"));
}

TEST_F(DispatcherTest, AsyncAnswersFromAnotherThread) {
    auto m = device();
    m->connect(disp);
    m->set_mode(sim::LocalModule::Mode::Async);
    auto r = disp.call("m-1", "measure_trace", {{"x", 0.2}, {"y", 0.2}}, 2s);
    EXPECT_EQ(r.outputs.at("trace").as_list().size(), 32u);
}

TEST_F(DispatcherTest, RequestIdsIncreasePerConnection) {
    auto m = device();
    m->connect(disp);
    for (int i = 0; i < 3; ++i) disp.call("m-1", "measure_trace", {{"x", 0.1}, {"y", 0.1}}, 1s);
    std::vector<std::int64_t> ids;
    for (const auto& msg : m->received())
        if (auto* r = std::get_if<ExecuteRequestMsg>(&msg)) ids.push_back(r->request_id);
    EXPECT_EQ(ids, (std::vector<std::int64_t>{1, 2, 3}));
}

TEST_F(DispatcherTest, ShutdownAllSendsShutdown) {
    auto m = device();
    m->connect(disp);
    disp.shutdown_all("maintenance");
    auto got = m->received();
    ASSERT_TRUE(std::holds_alternative<ShutdownMsg>(got.back()));
    EXPECT_EQ(std::get<ShutdownMsg>(got.back()).reason, "maintenance");
    EXPECT_TRUE(m->closed());
    EXPECT_EQ(step_errc([&] { disp.call("m-1", "measure_trace", {}, 1s); }), StepErrc::NoProvider);
}

TEST_F(DispatcherTest, ModuleShutdownClosesItsConnection) {
    auto m = device();
    m->connect(disp);
    m->send_to_core(ShutdownMsg{"bye"});
    EXPECT_TRUE(reg.list().empty());
}
