// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>

#include "aeos/protocol.hpp"
#include "aeos/registry.hpp"

namespace aeos {

enum class StepErrc { NoProvider, Timeout, ModuleError, SchemaViolation, CoercionError, Aborted };

const char* to_string(StepErrc c) noexcept;

class StepError : public Error {
public:
    StepError(StepErrc c, const std::string& detail, std::string module_code = {})
        : Error(to_string(c), detail), errc_(c), module_code_(std::move(module_code)) {}
    StepErrc errc() const noexcept { return errc_; }
    /// For ModuleError, the code the module put in EXECUTE_ERROR.
    const std::string& module_code() const noexcept { return module_code_; }

private:
    StepErrc errc_;
    std::string module_code_;
};

/// Outbound half of a module connection (a socket, or an in-process double).
/// `send` may be called from any thread; implementations serialize writes.
class FrameSink {
public:
    virtual ~FrameSink() = default;
    virtual void send(const Message& m) = 0;
    virtual void close() = 0;
};

struct CallResult {
    Value::Record outputs;
    std::int64_t elapsed_ms = 0;
};

/// Core side of the module protocol. Transport code feeds decoded messages
/// into `receive`; campaign code issues EXECUTE_REQUESTs through `call`.
///
/// No internal lock is held while a sink is invoked, so in-process sinks may
/// answer synchronously from inside `send`.
class Dispatcher {
public:
    explicit Dispatcher(ModuleRegistry& registry) : registry_(registry) {}
    ~Dispatcher();

    Dispatcher(const Dispatcher&) = delete;
    Dispatcher& operator=(const Dispatcher&) = delete;

    ConnectionId open(std::shared_ptr<FrameSink> sink);
    void receive(ConnectionId conn, const Message& m);
    /// Idempotent. Fails in-flight calls with NoProvider and unregisters the
    /// connection's module.
    void close(ConnectionId conn);
    /// Sends SHUTDOWN to every connection and closes them.
    void shutdown_all(const std::string& reason);

    /// Sends one EXECUTE_REQUEST to `module_id` and waits for its answer.
    /// Throws StepError: NoProvider, Timeout, ModuleError or Aborted (when
    /// `stop` is requested while waiting).
    CallResult call(const std::string& module_id, const std::string& capability, const Value::Record& inputs,
                    std::chrono::milliseconds timeout, std::stop_token stop = {});

    ModuleRegistry& registry() noexcept { return registry_; }

private:
    struct Pending;
    struct Connection;

    std::shared_ptr<Connection> find(ConnectionId conn) const;
    void close_with(ConnectionId conn, const std::string& reason);
    void fault(const std::shared_ptr<Connection>& c, const std::string& why);

    ModuleRegistry& registry_;
    mutable std::mutex mu_;
    ConnectionId next_conn_ = 0;
    std::map<ConnectionId, std::shared_ptr<Connection>> conns_;
};

}  // namespace aeos
