// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/dispatcher.hpp"

#include <condition_variable>
#include <optional>
#include <variant>
#include <vector>

namespace aeos {

const char* to_string(StepErrc c) noexcept {
    switch (c) {
    case StepErrc::NoProvider: return "NoProvider";
    case StepErrc::Timeout: return "Timeout";
    case StepErrc::ModuleError: return "ModuleError";
    case StepErrc::SchemaViolation: return "SchemaViolation";
    case StepErrc::CoercionError: return "CoercionError";
    case StepErrc::Aborted: return "Aborted";
    }
    return "Unknown";
}

struct Dispatcher::Pending {
    std::mutex mu;
    std::condition_variable_any cv;
    std::optional<std::variant<ExecuteResultMsg, ExecuteErrorMsg, StepError>> outcome;

    void resolve(std::variant<ExecuteResultMsg, ExecuteErrorMsg, StepError> v) {
        {
            std::lock_guard lock(mu);
            if (outcome) return;
            outcome = std::move(v);
        }
        cv.notify_all();
    }
};

struct Dispatcher::Connection {
    ConnectionId id = 0;
    std::shared_ptr<FrameSink> sink;
    // Held across request-id allocation and the write so ids hit the wire in order.
    std::mutex send_mu;
    std::int64_t last_request_id = 0;
    // Guarded by Dispatcher::mu_.
    std::string module_id;
    std::map<std::int64_t, std::shared_ptr<Pending>> pending;

    void send(const Message& m) {
        std::lock_guard lock(send_mu);
        sink->send(m);
    }
};

Dispatcher::~Dispatcher() { shutdown_all("core shutting down"); }

ConnectionId Dispatcher::open(std::shared_ptr<FrameSink> sink) {
    auto c = std::make_shared<Connection>();
    c->sink = std::move(sink);
    std::lock_guard lock(mu_);
    c->id = ++next_conn_;
    conns_.emplace(c->id, c);
    return c->id;
}

std::shared_ptr<Dispatcher::Connection> Dispatcher::find(ConnectionId conn) const {
    std::lock_guard lock(mu_);
    auto it = conns_.find(conn);
    return it == conns_.end() ? nullptr : it->second;
}

void Dispatcher::fault(const std::shared_ptr<Connection>& c, const std::string& why) {
    std::string module_id;
    {
        std::lock_guard lock(mu_);
        module_id = c->module_id;
    }
    if (module_id.empty()) {
        close_with(c->id, why);
        return;
    }
    try {
        registry_.mark_faulted(module_id);
    } catch (const RegistryError&) {
    }
}

void Dispatcher::receive(ConnectionId conn, const Message& m) {
    auto c = find(conn);
    if (!c) return;

    std::string module_id;
    {
        std::lock_guard lock(mu_);
        module_id = c->module_id;
    }

    if (const auto* reg = std::get_if<RegisterMsg>(&m)) {
        if (!module_id.empty()) {
            fault(c, "second REGISTER on one connection");
            return;
        }
        RegisterAckMsg ack;
        try {
            ack.module_id = registry_.register_module(reg->descriptor, conn);
            ack.ok = true;
            {
                std::lock_guard lock(mu_);
                c->module_id = ack.module_id;
            }
            c->send(ack);
        } catch (const RegistryError& e) {
            ack.ok = false;
            Violations vs = e.violations();
            if (vs.empty()) vs.push_back({e.code(), "module_name", e.detail()});
            ack.violations = to_value(vs).as_list();
            c->send(ack);
            close(conn);
        }
        return;
    }

    if (module_id.empty()) {
        close_with(conn, "expected REGISTER as the first frame");
        return;
    }

    if (const auto* hb = std::get_if<HeartbeatMsg>(&m)) {
        auto status = module_status_from(hb->status);
        if (hb->module_id != module_id || !status) {
            close_with(conn, "heartbeat does not match this connection's module");
            return;
        }
        try {
            registry_.heartbeat(module_id, *status);
        } catch (const Error& e) {
            close_with(conn, e.what());
            return;
        }
        c->send(HeartbeatAckMsg{});
        return;
    }

    std::int64_t rid = -1;
    std::variant<ExecuteResultMsg, ExecuteErrorMsg, StepError> outcome{StepError(StepErrc::ModuleError, "")};
    if (const auto* res = std::get_if<ExecuteResultMsg>(&m)) {
        rid = res->request_id;
        outcome = *res;
    } else if (const auto* err = std::get_if<ExecuteErrorMsg>(&m)) {
        rid = err->request_id;
        outcome = *err;
    } else if (std::holds_alternative<ShutdownMsg>(m)) {
        close(conn);
        return;
    } else {
        fault(c, std::string("unexpected ") + to_string(type_of(m)) + " from a module");
        return;
    }

    std::shared_ptr<Pending> p;
    {
        std::lock_guard lock(mu_);
        auto it = c->pending.find(rid);
        if (it == c->pending.end()) return;  // late answer to a call that already timed out
        p = it->second;
        c->pending.erase(it);
    }
    p->resolve(std::move(outcome));
}

void Dispatcher::close_with(ConnectionId conn, const std::string& reason) {
    if (auto c = find(conn)) {
        try {
            c->send(ShutdownMsg{reason});
        } catch (...) {
        }
    }
    close(conn);
}

void Dispatcher::close(ConnectionId conn) {
    std::shared_ptr<Connection> c;
    std::map<std::int64_t, std::shared_ptr<Pending>> pending;
    {
        std::lock_guard lock(mu_);
        auto it = conns_.find(conn);
        if (it == conns_.end()) return;
        c = it->second;
        conns_.erase(it);
        pending.swap(c->pending);
    }
    for (auto& [rid, p] : pending) p->resolve(StepError(StepErrc::NoProvider, "module connection closed"));
    registry_.connection_closed(conn);
    try {
        c->sink->close();
    } catch (...) {
    }
}

void Dispatcher::shutdown_all(const std::string& reason) {
    std::vector<ConnectionId> ids;
    {
        std::lock_guard lock(mu_);
        for (const auto& [id, c] : conns_) ids.push_back(id);
    }
    for (auto id : ids) close_with(id, reason);
}

CallResult Dispatcher::call(const std::string& module_id, const std::string& capability, const Value::Record& inputs,
                            std::chrono::milliseconds timeout, std::stop_token stop) {
    auto rec = registry_.find(module_id);
    if (!rec || !rec->live()) throw StepError(StepErrc::NoProvider, module_id + " is not available");
    auto c = find(rec->connection_id);
    if (!c) throw StepError(StepErrc::NoProvider, module_id + " has no open connection");

    auto p = std::make_shared<Pending>();
    auto deadline = std::chrono::steady_clock::now() + timeout;
    {
        std::lock_guard send_lock(c->send_mu);
        std::int64_t rid = ++c->last_request_id;
        {
            std::lock_guard lock(mu_);
            if (!conns_.count(c->id)) throw StepError(StepErrc::NoProvider, module_id + " disconnected");
            c->pending.emplace(rid, p);
        }
        try {
            c->sink->send(ExecuteRequestMsg{rid, capability, inputs});
        } catch (const std::exception& e) {
            std::lock_guard lock(mu_);
            c->pending.erase(rid);
            throw StepError(StepErrc::NoProvider, std::string("send failed: ") + e.what());
        }
    }

    std::unique_lock lock(p->mu);
    bool done = p->cv.wait_until(lock, stop, deadline, [&] { return p->outcome.has_value(); });
    if (!done) {
        lock.unlock();
        {
            std::lock_guard g(mu_);
            for (auto it = c->pending.begin(); it != c->pending.end(); ++it)
                if (it->second == p) {
                    c->pending.erase(it);
                    break;
                }
        }
        if (stop.stop_requested()) throw StepError(StepErrc::Aborted, "aborted while waiting for " + module_id);
        throw StepError(StepErrc::Timeout,
                        module_id + " did not answer " + capability + " within " + std::to_string(timeout.count()) +
                            " ms");
    }

    auto outcome = std::move(*p->outcome);
    if (auto* e = std::get_if<StepError>(&outcome)) throw *e;
    if (auto* e = std::get_if<ExecuteErrorMsg>(&outcome)) throw StepError(StepErrc::ModuleError, e->detail, e->code);
    auto& r = std::get<ExecuteResultMsg>(outcome);
    return CallResult{std::move(r.outputs), r.elapsed_ms};
}

}  // namespace aeos
