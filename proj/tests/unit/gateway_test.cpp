// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "aeos/gateway.hpp"
#include "sim_lab.hpp"
#include "temp_dir.hpp"

using namespace aeos;
using namespace std::chrono_literals;

namespace {

struct GatewayTest : ::testing::Test {
    ManualClock clock{1'700'000'000'000, 1};
    std::unique_ptr<Core> core;
    std::unique_ptr<Gateway> gw;
    sim::SimLab lab;
    std::unique_ptr<httplib::Client> http;

    void SetUp() override {
        CoreOptions o;
        o.clock = &clock;
        o.sweeper = false;
        core = std::make_unique<Core>(o);
        lab = sim::SimLab::attach(core->dispatcher());
        GatewayOptions g;
        g.port = 0;
        g.keepalive = 100ms;
        gw = std::make_unique<Gateway>(*core, g);
        gw->start();
        http = std::make_unique<httplib::Client>("127.0.0.1", gw->port());
        http->set_read_timeout(10, 0);
    }
    void TearDown() override {
        http.reset();
        gw.reset();
        core.reset();
    }

    Value get_json(const std::string& path, int expect_status = 200) {
        auto r = http->Get(path);
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        EXPECT_EQ(r->status, expect_status) << path << " " << r->body;
        return parse_json(r->body);
    }
    Value post_json(const std::string& path, const Value& body, int expect_status = 200) {
        auto r = http->Post(path, canonical_encode(body), "application/json");
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        EXPECT_EQ(r->status, expect_status) << path << " " << r->body;
        return parse_json(r->body);
    }

    std::string create(const CampaignSpec& spec) {
        auto v = post_json("/api/campaigns", spec.to_value(), 201);
        return v.at("campaign").at("campaign_id").as_text();
    }
    void run_to_end(const std::string& id) {
        post_json("/api/campaigns/" + id + "/start", Value::Record{});
        ASSERT_TRUE(core->wait_settled(id, 10s));
    }

    /// Reads the event stream from `since` until `count` events arrived.
    std::vector<Value> read_events(std::uint64_t since, std::size_t count) {
        std::vector<Value> events;
        std::string buf;
        httplib::Client c("127.0.0.1", gw->port());
        c.set_read_timeout(10, 0);
        c.Get("/api/events?since=" + std::to_string(since), [&](const char* data, size_t n) {
            buf.append(data, n);
            std::size_t nl;
            while ((nl = buf.find('\n')) != std::string::npos) {
                std::string line = buf.substr(0, nl);
                buf.erase(0, nl + 1);
                if (!line.empty() && line[0] != ':') events.push_back(parse_json(line));
            }
            return events.size() < count;
        });
        return events;
    }
};

}  // namespace

TEST_F(GatewayTest, ListsAndShowsModules) {
    auto list = get_json("/api/modules");
    ASSERT_EQ(list.as_list().size(), 2u);
    EXPECT_EQ(list.as_list()[0].at("module_id").as_text(), "m-1");
    auto one = get_json("/api/modules/m-2");
    EXPECT_EQ(one.at("descriptor").at("module_name").as_text(), "sim-analyzer");
    auto missing = get_json("/api/modules/m-9", 404);
    EXPECT_EQ(missing.at("code").as_text(), "UnknownModule");
}

TEST_F(GatewayTest, ManualExecute) {
    auto v = post_json("/api/modules/m-1/execute",
                       Value::Record{{"capability", "measure_trace"}, {"inputs", Value::Record{{"x", 0.3}, {"y", 0.7}}}});
    EXPECT_EQ(v.at("outputs").at("trace").as_list().size(), 32u);

    auto bad = post_json("/api/modules/m-1/execute",
                         Value::Record{{"capability", "measure_trace"}, {"inputs", Value::Record{{"x", 7.0}, {"y", 0.7}}}},
                         422);
    EXPECT_EQ(bad.at("code").as_text(), "OutOfBounds");
    EXPECT_EQ(bad.at("violations").as_list()[0].at("path").as_text(), "x");
    EXPECT_EQ(post_json("/api/modules/m-1/execute", Value::Record{{"capability", "nope"}}, 404).at("code").as_text(),
              "UnknownCapability");
    post_json("/api/modules/m-9/execute", Value::Record{{"capability", "measure_trace"}}, 404);

    lab.device->set_mode(sim::LocalModule::Mode::Fail, "DeviceJam", "stuck");
    auto failed = post_json("/api/modules/m-1/execute",
                            Value::Record{{"capability", "measure_trace"}, {"inputs", Value::Record{{"x", 0.3}, {"y", 0.7}}}},
                            502);
    EXPECT_EQ(failed.at("detail").as_text(), "DeviceJam: stuck");
}

TEST_F(GatewayTest, ExecuteOnOfflineModuleIs503) {
    clock.advance(10'000);
    core->registry().sweep_stale();
    post_json("/api/modules/m-1/execute",
              Value::Record{{"capability", "measure_trace"}, {"inputs", Value::Record{{"x", 0.3}, {"y", 0.7}}}}, 503);
}

TEST_F(GatewayTest, MalformedBodiesAre422) {
    auto r = http->Post("/api/campaigns", "{not json", "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 422);
    EXPECT_EQ(parse_json(r->body).at("code").as_text(), "MalformedJson");
    r = http->Post("/api/campaigns", "[1,2]", "application/json");
    EXPECT_EQ(r->status, 422);
}

TEST_F(GatewayTest, CampaignLifecycle) {
    auto id = create(sim::sim_campaign({}, std::nullopt, 3));
    EXPECT_EQ(id, "c-1");
    auto listed = get_json("/api/campaigns");
    ASSERT_EQ(listed.as_list().size(), 1u);
    EXPECT_EQ(listed.as_list()[0].at("status").as_text(), "DRAFT");

    run_to_end(id);
    auto c = get_json("/api/campaigns/" + id);
    EXPECT_EQ(c.at("status").as_text(), "COMPLETED");
    EXPECT_EQ(c.at("campaign_id").as_text(), id);

    auto exps = get_json("/api/campaigns/" + id + "/experiments?status=DONE&from=2&to=5");
    ASSERT_EQ(exps.as_list().size(), 3u);
    EXPECT_EQ(exps.as_list()[0].at("index").as_int(), 2);
    get_json("/api/campaigns/" + id + "/experiments?status=WEIRD", 422);
    get_json("/api/campaigns/" + id + "/experiments?from=-1", 422);

    auto again = post_json("/api/campaigns/" + id + "/start", Value::Record{}, 409);
    EXPECT_EQ(again.at("code").as_text(), "InvalidTransition");
    get_json("/api/campaigns/c-42", 404);
    post_json("/api/campaigns/c-42/pause", Value::Record{}, 404);
}

TEST_F(GatewayTest, ValidationFailureListsViolations) {
    auto spec = sim::sim_campaign({}, std::nullopt, 3);
    spec.stop = {};
    auto v = post_json("/api/campaigns", spec.to_value(), 422);
    EXPECT_EQ(v.at("code").as_text(), "ValidationFailed");
    ASSERT_FALSE(v.at("violations").as_list().empty());
    EXPECT_EQ(v.at("violations").as_list()[0].at("code").as_text(), "NoStopCriterion");
}

TEST_F(GatewayTest, Export) {
    auto id = create(sim::sim_campaign({}, std::nullopt, 2));
    run_to_end(id);
    auto csv = http->Get("/api/campaigns/" + id + "/export?format=csv");
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->status, 200);
    EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
    EXPECT_EQ(csv->body, core->export_campaign(id, ExportFormat::Csv));
    EXPECT_EQ(csv->body.substr(0, csv->body.find("\r\n")), "index,status,x,y,objective,started,ended");

    auto json = http->Get("/api/campaigns/" + id + "/export");
    ASSERT_TRUE(json);
    EXPECT_EQ(json->body, core->export_campaign(id, ExportFormat::Json));
    get_json("/api/campaigns/" + id + "/export?format=xml", 422);
    get_json("/api/campaigns/c-9/export", 404);
}

TEST_F(GatewayTest, UnknownRoutesAre404Json) {
    auto v = get_json("/api/nothing", 404);
    EXPECT_EQ(v.at("code").as_text(), "NotFound");
}

TEST_F(GatewayTest, EventStreamReplaysJournalThenFollows) {
    auto id = create(sim::sim_campaign({}, std::nullopt, 2));
    run_to_end(id);
    auto head = core->journal().head();
    auto events = read_events(0, head);
    ASSERT_EQ(events.size(), head);
    for (std::size_t i = 0; i < events.size(); ++i)
        EXPECT_EQ(events[i].at("seq").as_int(), static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(events[0].at("type").as_text(), "module_registered");
    EXPECT_EQ(events.back().at("type").as_text(), "campaign_status");

    // A client that resumes from the last seq it saw gets the rest without gaps.
    auto rest_of = [&](std::uint64_t since) { return read_events(since, head - since); };
    auto tail = rest_of(5);
    ASSERT_EQ(tail.size(), head - 5);
    EXPECT_EQ(tail.front().at("seq").as_int(), 6);
    for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_EQ(tail[i].at("seq"), events[5 + i].at("seq"));

    // Live delivery of entries appended after the stream opened.
    std::jthread later([&] {
        std::this_thread::sleep_for(50ms);
        create(sim::sim_campaign({}, 3, 2));
    });
    auto live = read_events(head, 1);
    ASSERT_EQ(live.size(), 1u);
    EXPECT_EQ(live[0].at("seq").as_int(), static_cast<std::int64_t>(head + 1));
    EXPECT_EQ(live[0].at("body").at("status").as_text(), "DRAFT");
}

TEST_F(GatewayTest, EventStreamSendsKeepalives) {
    std::string seen;
    httplib::Client c("127.0.0.1", gw->port());
    c.Get("/api/events?since=" + std::to_string(core->journal().head()), [&](const char* data, size_t n) {
        seen.append(data, n);
        return seen.find(":keepalive\n") == std::string::npos;
    });
    EXPECT_NE(seen.find(":keepalive"), std::string::npos);
}

TEST_F(GatewayTest, EventStreamRejectsFutureCursor) {
    get_json("/api/events?since=999999", 422);
    get_json("/api/events?since=abc", 422);
}

TEST(GatewayUi, ServesStaticFiles) {
    sim::TempDir dir;
    {
        std::ofstream(dir.path() / "index.html") << "<html>ui</html>";
    }
    CoreOptions o;
    o.sweeper = false;
    Core core(o);
    GatewayOptions g;
    g.port = 0;
    g.ui_dir = dir.path();
    Gateway gw(core, g);
    gw.start();
    httplib::Client c("127.0.0.1", gw.port());
    auto r = c.Get("/index.html");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->body, "<html>ui</html>");
    EXPECT_EQ(c.Get("/api/campaigns")->body, "[]");
}

TEST(ApiErrors, StatusMapping) {
    EXPECT_EQ(api_error_from(CampaignError(CampaignErrc::UnknownCampaign, "")).status, 404);
    EXPECT_EQ(api_error_from(CampaignError(CampaignErrc::InvalidTransition, "")).status, 409);
    EXPECT_EQ(api_error_from(CampaignError(CampaignErrc::ValidationFailed, "")).status, 422);
    EXPECT_EQ(api_error_from(RegistryError(RegistryErrc::NoProvider, "")).status, 503);
    EXPECT_EQ(api_error_from(StepError(StepErrc::Timeout, "")).status, 504);
    EXPECT_EQ(api_error_from(StepError(StepErrc::NoProvider, "")).status, 503);
    EXPECT_EQ(api_error_from(JournalError(JournalErrc::StorageFull, "")).status, 507);
    EXPECT_EQ(api_error_from(JournalError(JournalErrc::IoFailure, "")).status, 500);
    EXPECT_EQ(api_error_from(std::runtime_error("boom")).status, 500);
}
