// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace aeos {

/// Time source. Wall time stamps records; steady time drives liveness.
class Clock {
public:
    virtual ~Clock() = default;
    /// Milliseconds since the Unix epoch.
    virtual std::int64_t wall_ms() const = 0;
    /// Monotonic milliseconds from an arbitrary origin.
    virtual std::int64_t steady_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t wall_ms() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
    std::int64_t steady_ms() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
    }
};

/// Test clock. With a non-zero `tick`, every wall_ms() read advances time by
/// `tick`, which makes timestamps deterministic but strictly increasing.
class ManualClock final : public Clock {
public:
    explicit ManualClock(std::int64_t start_ms = 0, std::int64_t tick = 0) : now_(start_ms), tick_(tick) {}

    std::int64_t wall_ms() const override { return now_.fetch_add(tick_); }
    std::int64_t steady_ms() const override { return now_.load(); }

    void set(std::int64_t ms) { now_.store(ms); }
    void advance(std::int64_t ms) { now_.fetch_add(ms); }

private:
    mutable std::atomic<std::int64_t> now_;
    std::int64_t tick_;
};

}  // namespace aeos
