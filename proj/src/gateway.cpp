// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/gateway.hpp"

#include <charconv>
#include <functional>
#include <stdexcept>

#include "httplib.h"

namespace aeos {

Value ApiError::to_value() const {
    Value::Record r{{"status", status}, {"code", code}, {"detail", detail}};
    if (violations) r.emplace("violations", aeos::to_value(*violations));
    return r;
}

ApiError api_error_from(const std::exception& ex) {
    if (const auto* e = dynamic_cast<const CampaignError*>(&ex)) {
        int status = 500;
        switch (e->errc()) {
        case CampaignErrc::UnknownCampaign: status = 404; break;
        case CampaignErrc::InvalidTransition:
        case CampaignErrc::NotRunning: status = 409; break;
        case CampaignErrc::ValidationFailed: status = 422; break;
        }
        ApiError out{status, e->code(), e->detail(), std::nullopt};
        if (!e->violations().empty()) out.violations = e->violations();
        return out;
    }
    if (const auto* e = dynamic_cast<const RegistryError*>(&ex)) {
        int status = e->errc() == RegistryErrc::UnknownModule ? 404 : e->errc() == RegistryErrc::NoProvider ? 503 : 422;
        ApiError out{status, e->code(), e->detail(), std::nullopt};
        if (!e->violations().empty()) out.violations = e->violations();
        return out;
    }
    if (const auto* e = dynamic_cast<const StepError*>(&ex)) {
        int status = 500;
        switch (e->errc()) {
        case StepErrc::NoProvider: status = 503; break;
        case StepErrc::Timeout: status = 504; break;
        case StepErrc::ModuleError: status = 502; break;
        case StepErrc::SchemaViolation:
        case StepErrc::CoercionError: status = 422; break;
        case StepErrc::Aborted: status = 409; break;
        }
        std::string detail = e->module_code().empty() ? e->detail() : e->module_code() + ": " + e->detail();
        return {status, e->code(), detail, std::nullopt};
    }
    if (const auto* e = dynamic_cast<const CoercionError*>(&ex))
        return {422, e->code(), e->detail(), Violations{{e->code(), e->path(), e->detail()}}};
    if (const auto* e = dynamic_cast<const CodecError*>(&ex)) return {422, "MalformedJson", e->detail(), std::nullopt};
    if (const auto* e = dynamic_cast<const JournalError*>(&ex))
        return {e->errc() == JournalErrc::StorageFull ? 507 : 500, e->code(), e->detail(), std::nullopt};
    if (const auto* e = dynamic_cast<const Error*>(&ex)) {
        int status = e->code() == "UnknownCapability" ? 404 : 422;
        return {status, e->code(), e->detail(), std::nullopt};
    }
    return {500, "Internal", ex.what(), std::nullopt};
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const Value& v) {
    res.status = status;
    res.set_content(canonical_encode(v), kJson);
}

void send_error(httplib::Response& res, const ApiError& e) { send_json(res, e.status, e.to_value()); }

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

/// Every handler funnels exceptions into exactly one ApiError body.
httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const std::exception& e) {
            send_error(res, api_error_from(e));
        }
    };
}

std::optional<std::int64_t> int_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    std::string s = req.get_param_value(name);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < 0)
        throw Error("InvalidParameter", std::string(name) + " must be a non-negative integer");
    return v;
}

Value::Record json_body(const httplib::Request& req) {
    Value v = parse_json(req.body);
    if (!v.is_record()) throw Error("InvalidRequest", "request body must be a JSON object");
    return v.as_record();
}

Value list_of(const std::vector<ExperimentRecord>& xs) {
    Value::List out;
    for (const auto& e : xs) out.push_back(e.to_value());
    return out;
}

Value violations_value(const Violations& vs) { return to_value(vs); }

}  // namespace

Gateway::Gateway(Core& core, GatewayOptions options)
    : core_(core), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    int threads = std::max(4, options_.threads);
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<size_t>(threads)); };
    routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::routes() {
    auto& s = *server_;

    s.Get("/api/modules", guarded([this](const httplib::Request&, httplib::Response& res) {
              auto now = core_.clock().steady_ms();
              Value::List out;
              for (const auto& r : core_.registry().list()) out.push_back(r.to_value(now));
              send_json(res, 200, out);
          }));

    s.Get(R"(/api/modules/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              auto rec = core_.registry().find(req.matches[1]);
              if (!rec) throw RegistryError(RegistryErrc::UnknownModule, "no module " + std::string(req.matches[1]));
              send_json(res, 200, rec->to_value(core_.clock().steady_ms()));
          }));

    s.Post(R"(/api/modules/([^/]+)/execute)", guarded([this](const httplib::Request& req, httplib::Response& res) {
               std::string id = req.matches[1];
               if (!core_.registry().find(id)) throw RegistryError(RegistryErrc::UnknownModule, "no module " + id);
               auto body = json_body(req);
               auto cap = body.find("capability");
               if (cap == body.end() || !cap->second.is_text())
                   throw Error("InvalidRequest", "capability (text) is required");
               Value::Record inputs;
               if (auto in = body.find("inputs"); in != body.end()) {
                   if (!in->second.is_record()) throw Error("InvalidRequest", "inputs must be a record");
                   inputs = in->second.as_record();
               }
               auto outputs = core_.manual_execute(id, cap->second.as_text(), inputs);
               send_json(res, 200,
                         Value::Record{{"module_id", id}, {"capability", cap->second}, {"outputs", std::move(outputs)}});
           }));

    s.Get("/api/campaigns", guarded([this](const httplib::Request&, httplib::Response& res) {
              Value::List out;
              for (const auto& c : core_.list_campaigns()) out.push_back(campaign_summary(c));
              send_json(res, 200, out);
          }));

    s.Post("/api/campaigns", guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto created = core_.create_campaign(Value(json_body(req)));
               send_json(res, 201,
                         Value::Record{{"campaign", created.campaign.to_value()},
                                       {"warnings", violations_value(created.warnings)}});
           }));

    s.Get(R"(/api/campaigns/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, core_.campaign(req.matches[1]).to_value());
          }));

    s.Post(R"(/api/campaigns/([^/]+)/(start|pause|resume|abort))",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto action = control_action_from(std::string(req.matches[2]));
               send_json(res, 200, core_.control(req.matches[1], *action).to_value());
           }));

    s.Get(R"(/api/campaigns/([^/]+)/experiments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
              ExperimentQuery q;
              if (req.has_param("status")) {
                  auto st = experiment_status_from(req.get_param_value("status"));
                  if (!st) throw Error("InvalidParameter", "unknown status " + req.get_param_value("status"));
                  q.status = st;
              }
              q.from = int_param(req, "from");
              q.to = int_param(req, "to");
              send_json(res, 200, list_of(core_.query(req.matches[1], q)));
          }));

    s.Get(R"(/api/campaigns/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
              std::string fmt = req.has_param("format") ? req.get_param_value("format") : "json";
              auto format = export_format_from(fmt);
              if (!format) throw Error("InvalidParameter", "format must be csv or json");
              std::string id = req.matches[1];
              std::string doc = core_.export_campaign(id, *format);
              bool csv = *format == ExportFormat::Csv;
              res.status = 200;
              res.set_header("Content-Disposition",
                             "attachment; filename=\"" + id + (csv ? ".csv" : ".json") + "\"");
              res.set_content(std::move(doc), csv ? "text/csv" : kJson);
          }));

    s.Get("/api/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
              std::uint64_t since = static_cast<std::uint64_t>(int_param(req, "since").value_or(0));
              std::uint64_t head = core_.journal().head();
              if (since > head)
                  throw Error("InvalidParameter",
                              "since " + std::to_string(since) + " is beyond the journal head " + std::to_string(head));

              struct Cursor {
                  std::uint64_t last;
                  std::chrono::steady_clock::time_point last_write;
              };
              auto cur = std::make_shared<Cursor>(Cursor{since, std::chrono::steady_clock::now()});
              auto keepalive = options_.keepalive;
              res.set_header("Cache-Control", "no-cache");
              res.set_chunked_content_provider(
                  "application/x-ndjson", [this, cur, keepalive](size_t, httplib::DataSink& sink) {
                      using namespace std::chrono;
                      if (stopping_) return false;
                      auto batch = core_.journal().since(cur->last, 256);
                      if (!batch.empty()) {
                          std::string out;
                          for (const auto& e : batch) {
                              out += canonical_encode(to_api_event(e).to_value());
                              out.push_back('\n');
                          }
                          if (!sink.write(out.data(), out.size())) return false;
                          cur->last = batch.back().seq;
                          cur->last_write = steady_clock::now();
                          return true;
                      }
                      auto now = steady_clock::now();
                      if (now - cur->last_write >= keepalive) {
                          static constexpr char kKeepalive[] = ":keepalive\n";
                          if (!sink.write(kKeepalive, sizeof kKeepalive - 1)) return false;
                          cur->last_write = now;
                          return true;
                      }
                      if (!sink.is_writable()) return false;
                      auto wake = std::min(cur->last_write + keepalive, now + milliseconds(200));
                      core_.journal().wait_beyond(cur->last, wake);
                      return true;
                  });
          }));

    if (!options_.ui_dir.empty()) s.set_mount_point("/", options_.ui_dir.string());

    s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        std::string code = res.status == 404 ? "NotFound" : "HttpError";
        send_json(res, res.status, ApiError{res.status, code, req.method + " " + req.path, std::nullopt}.to_value());
        return httplib::Server::HandlerResponse::Handled;
    });
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, api_error_from(e));
        } catch (...) {
            send_error(res, ApiError{500, "Internal", "unknown failure", std::nullopt});
        }
    });
}

void Gateway::start() {
    if (thread_.joinable()) return;
    if (options_.port == 0) {
        int p = server_->bind_to_any_port(options_.bind);
        if (p <= 0) throw std::runtime_error("cannot bind HTTP on " + options_.bind);
        port_ = static_cast<std::uint16_t>(p);
    } else {
        if (!server_->bind_to_port(options_.bind, options_.port))
            throw std::runtime_error("cannot bind HTTP on " + options_.bind + ":" + std::to_string(options_.port));
        port_ = options_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void Gateway::stop() {
    stopping_ = true;
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace aeos
