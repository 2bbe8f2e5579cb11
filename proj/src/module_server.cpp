// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/module_server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <iostream>
#include <system_error>
#include <vector>

namespace aeos {

namespace net {

namespace {

[[noreturn]] void throw_errno(const std::string& what) { throw std::system_error(errno, std::generic_category(), what); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    std::string h = host == "localhost" || host.empty() ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        addrinfo* res = nullptr;
        if (::getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res)
            throw std::system_error(EINVAL, std::generic_category(), "cannot resolve " + host);
        addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
        ::freeaddrinfo(res);
    }
    return addr;
}

}  // namespace

int connect_tcp(const std::string& host, std::uint16_t port) {
    sockaddr_in addr = resolve(host, port);
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw_errno("socket");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(fd);
        throw std::system_error(err, std::generic_category(), "connect " + host + ":" + std::to_string(port));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
    std::size_t done = 0;
    while (done < n) {
        ssize_t w = ::send(fd, data + done, n - done, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw_errno("send");
        }
        done += static_cast<std::size_t>(w);
    }
}

}  // namespace net

namespace {

class SocketSink final : public FrameSink {
public:
    explicit SocketSink(int fd) : fd_(fd) {}
    ~SocketSink() override { ::close(fd_); }

    void send(const Message& m) override {
        Octets bytes = encode_message(m);
        std::lock_guard lock(mu_);
        if (closed_) throw std::system_error(EPIPE, std::generic_category(), "connection closed");
        net::write_all(fd_, bytes.data(), bytes.size());
    }

    void close() override {
        std::lock_guard lock(mu_);
        if (closed_) return;
        closed_ = true;
        ::shutdown(fd_, SHUT_RDWR);
    }

    int fd() const noexcept { return fd_; }

private:
    int fd_;
    std::mutex mu_;
    bool closed_ = false;
};

}  // namespace

ModuleServer::ModuleServer(Dispatcher& dispatcher, const std::string& bind_address, std::uint16_t port)
    : dispatcher_(dispatcher) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    std::string host = bind_address.empty() || bind_address == "localhost" ? "127.0.0.1" : bind_address;
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw std::system_error(EINVAL, std::generic_category(), "bad bind address " + bind_address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        int err = errno;
        ::close(listen_fd_);
        throw std::system_error(err, std::generic_category(), "bind " + host + ":" + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    acceptor_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
}

ModuleServer::~ModuleServer() { stop(); }

void ModuleServer::stop() {
    if (acceptor_.joinable()) {
        acceptor_.request_stop();
        acceptor_.join();
    }
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::list<std::jthread> readers;
    {
        std::lock_guard lock(mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        readers.swap(readers_);
    }
    for (auto& t : readers) {
        t.request_stop();
        if (t.joinable()) t.join();
    }
}

void ModuleServer::accept_loop(std::stop_token st) {
    while (!st.stop_requested()) {
        pollfd p{listen_fd_, POLLIN, 0};
        int r = ::poll(&p, 1, 100);
        if (r <= 0) continue;
        int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mu_);
        open_fds_.push_back(fd);
        readers_.emplace_back([this, fd](std::stop_token rst) { serve(rst, fd); });
    }
}

void ModuleServer::serve(std::stop_token st, int fd) {
    auto sink = std::make_shared<SocketSink>(fd);
    ConnectionId conn = dispatcher_.open(sink);
    std::vector<std::uint8_t> buf;
    std::uint8_t chunk[1 << 16];

    auto hang_up = [&](const std::string& why) {
        try {
            sink->send(ShutdownMsg{why});
        } catch (const std::exception&) {
        }
        dispatcher_.close(conn);
    };

    bool open = true;
    while (open && !st.stop_requested()) {
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buf.insert(buf.end(), chunk, chunk + n);

        std::size_t offset = 0;
        while (offset < buf.size()) {
            try {
                auto d = decode_message(std::span<const std::uint8_t>(buf).subspan(offset));
                offset += d.consumed;
                dispatcher_.receive(conn, d.message);
            } catch (const CodecError& e) {
                if (e.errc() == CodecErrc::IncompleteFrame) break;
                hang_up(std::string("undecodable frame: ") + e.what());
                open = false;
                break;
            }
        }
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(std::min(offset, buf.size())));
    }
    dispatcher_.close(conn);
    std::lock_guard lock(mu_);
    open_fds_.remove(fd);
}

}  // namespace aeos
