// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP API and live event stream over the core.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "aeos/core.hpp"

namespace httplib {
class Server;
}

namespace aeos {

struct ApiError {
    int status = 500;
    std::string code;
    std::string detail;
    std::optional<Violations> violations;

    Value to_value() const;
};

/// Maps a core exception to its HTTP status and error body.
ApiError api_error_from(const std::exception& e);

struct GatewayOptions {
    std::string bind = "127.0.0.1";
    /// 0 picks an ephemeral port.
    std::uint16_t port = 8080;
    /// Static web UI mounted at "/" when set.
    std::filesystem::path ui_dir;
    std::chrono::milliseconds keepalive{15000};
    /// Each open event stream occupies one worker.
    int threads = 32;
};

class Gateway {
public:
    Gateway(Core& core, GatewayOptions options);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds and starts serving on a background thread. Throws
    /// std::runtime_error when the port cannot be bound.
    void start();
    void stop();
    std::uint16_t port() const noexcept { return port_; }

private:
    void routes();

    Core& core_;
    GatewayOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

}  // namespace aeos
