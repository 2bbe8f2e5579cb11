// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aeos/clock.hpp"
#include "aeos/schema.hpp"

namespace aeos {

using ConnectionId = std::uint64_t;

enum class ModuleStatus { Ready, Busy, Offline, Faulted };

const char* to_string(ModuleStatus s) noexcept;
std::optional<ModuleStatus> module_status_from(std::string_view s) noexcept;

struct ModuleRecord {
    std::string module_id;
    ModuleDescriptor descriptor;
    ConnectionId connection_id = 0;
    ModuleStatus status = ModuleStatus::Ready;
    /// Steady-clock ms of the last heartbeat (or of registration).
    std::int64_t last_heartbeat = 0;
    /// Wall-clock ms.
    std::int64_t registered_at = 0;

    bool live() const noexcept { return status == ModuleStatus::Ready || status == ModuleStatus::Busy; }
    Value to_value(std::int64_t steady_now) const;
};

enum class RegistryEventKind { Registered, Offline, Recovered, Unregistered, Faulted };

const char* to_string(RegistryEventKind k) noexcept;

struct RegistryEvent {
    RegistryEventKind kind;
    std::string module_id;
    std::string module_name;
    std::int64_t timestamp = 0;
};

enum class RegistryErrc { InvalidDescriptor, DuplicateName, UnknownModule, NoProvider };

const char* to_string(RegistryErrc c) noexcept;

class RegistryError : public Error {
public:
    RegistryError(RegistryErrc c, const std::string& detail, Violations violations = {})
        : Error(to_string(c), detail), errc_(c), violations_(std::move(violations)) {}
    RegistryErrc errc() const noexcept { return errc_; }
    const Violations& violations() const noexcept { return violations_; }

private:
    RegistryErrc errc_;
    Violations violations_;
};

/// Read-only capability lookup used when compiling campaigns.
class CapabilityCatalog {
public:
    virtual ~CapabilityCatalog() = default;
    /// Schema of (capability, role) from any known module, live or not.
    virtual std::optional<CapabilitySchema> lookup(const std::string& capability, Role role) const = 0;
    virtual bool has_live_provider(const std::string& capability, Role role) const = 0;
};

/// Connected modules and their liveness.
///
/// All mutations are linearized behind one lock. Listeners run while that
/// lock is held, so events are observed in transition order; a listener must
/// not call back into the registry.
class ModuleRegistry final : public CapabilityCatalog {
public:
    using Listener = std::function<void(const RegistryEvent&)>;

    /// Offline once now - last_heartbeat > kStaleFactor * interval.
    static constexpr std::int64_t kStaleFactor = 3;

    explicit ModuleRegistry(const Clock& clock) : clock_(clock) {}

    void add_listener(Listener l);

    /// Parses and validates a raw descriptor; throws InvalidDescriptor
    /// carrying every violation, or DuplicateName.
    std::string register_module(const Value& raw_descriptor, ConnectionId conn);
    std::string register_module(const ModuleDescriptor& d, ConnectionId conn);

    void heartbeat(const std::string& module_id, ModuleStatus status);
    std::vector<std::string> sweep_stale(std::int64_t steady_now);
    std::vector<std::string> sweep_stale() { return sweep_stale(clock_.steady_ms()); }

    /// Lowest-numbered READY/BUSY provider of (capability, role).
    std::string resolve_capability(const std::string& capability, Role role) const;

    void unregister(const std::string& module_id);
    /// Unregisters whatever module the connection carried, if any.
    std::optional<std::string> connection_closed(ConnectionId conn);
    void mark_faulted(const std::string& module_id);

    std::optional<ModuleRecord> find(const std::string& module_id) const;
    std::vector<ModuleRecord> list() const;

    std::optional<CapabilitySchema> lookup(const std::string& capability, Role role) const override;
    bool has_live_provider(const std::string& capability, Role role) const override;

    const Clock& clock() const noexcept { return clock_; }

private:
    void emit(RegistryEventKind kind, const ModuleRecord& r);
    void unregister_locked(std::uint64_t key);

    const Clock& clock_;
    mutable std::shared_mutex mu_;
    std::uint64_t counter_ = 0;
    std::map<std::uint64_t, ModuleRecord> records_;
    std::vector<Listener> listeners_;
};

}  // namespace aeos
