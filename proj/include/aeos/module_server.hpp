// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// TCP listener for module connections. One reader thread per connection
// decodes frames and hands them to the dispatcher.

#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "aeos/dispatcher.hpp"

namespace aeos {

class ModuleServer {
public:
    /// Binds immediately; port 0 picks an ephemeral port. Throws
    /// std::system_error when the address cannot be bound.
    ModuleServer(Dispatcher& dispatcher, const std::string& bind_address, std::uint16_t port);
    ~ModuleServer();

    ModuleServer(const ModuleServer&) = delete;
    ModuleServer& operator=(const ModuleServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    /// Stops accepting and closes every connection. Idempotent.
    void stop();

private:
    void accept_loop(std::stop_token st);
    void serve(std::stop_token st, int fd);

    Dispatcher& dispatcher_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;

    std::mutex mu_;
    std::list<std::jthread> readers_;
    std::list<int> open_fds_;
    std::jthread acceptor_;
};

/// Blocking socket helpers shared with the test client.
namespace net {

/// Connects to host:port (IPv4 dotted quad or "localhost"). Throws
/// std::system_error.
int connect_tcp(const std::string& host, std::uint16_t port);
/// Writes everything or throws std::system_error.
void write_all(int fd, const std::uint8_t* data, std::size_t n);

}  // namespace net

}  // namespace aeos
