// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/registry.hpp"

#include <charconv>
#include <mutex>

namespace aeos {

const char* to_string(ModuleStatus s) noexcept {
    switch (s) {
    case ModuleStatus::Ready: return "READY";
    case ModuleStatus::Busy: return "BUSY";
    case ModuleStatus::Offline: return "OFFLINE";
    case ModuleStatus::Faulted: return "FAULTED";
    }
    return "UNKNOWN";
}

std::optional<ModuleStatus> module_status_from(std::string_view s) noexcept {
    for (auto st : {ModuleStatus::Ready, ModuleStatus::Busy, ModuleStatus::Offline, ModuleStatus::Faulted})
        if (s == to_string(st)) return st;
    return std::nullopt;
}

const char* to_string(RegistryEventKind k) noexcept {
    switch (k) {
    case RegistryEventKind::Registered: return "module_registered";
    case RegistryEventKind::Offline: return "module_offline";
    case RegistryEventKind::Recovered: return "module_recovered";
    case RegistryEventKind::Unregistered: return "module_unregistered";
    case RegistryEventKind::Faulted: return "module_faulted";
    }
    return "unknown";
}

const char* to_string(RegistryErrc c) noexcept {
    switch (c) {
    case RegistryErrc::InvalidDescriptor: return "InvalidDescriptor";
    case RegistryErrc::DuplicateName: return "DuplicateName";
    case RegistryErrc::UnknownModule: return "UnknownModule";
    case RegistryErrc::NoProvider: return "NoProvider";
    }
    return "Unknown";
}

Value ModuleRecord::to_value(std::int64_t steady_now) const {
    return Value::Record{{"module_id", module_id},
                         {"descriptor", descriptor.to_value()},
                         {"connection_id", static_cast<std::int64_t>(connection_id)},
                         {"status", aeos::to_string(status)},
                         {"last_heartbeat", last_heartbeat},
                         {"heartbeat_age_ms", steady_now - last_heartbeat},
                         {"registered_at", registered_at}};
}

namespace {

std::optional<std::uint64_t> key_of(const std::string& module_id) {
    if (module_id.size() < 3 || module_id.compare(0, 2, "m-") != 0) return std::nullopt;
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(module_id.data() + 2, module_id.data() + module_id.size(), n);
    if (ec != std::errc{} || p != module_id.data() + module_id.size()) return std::nullopt;
    return n;
}

}  // namespace

void ModuleRegistry::add_listener(Listener l) {
    std::unique_lock lock(mu_);
    listeners_.push_back(std::move(l));
}

void ModuleRegistry::emit(RegistryEventKind kind, const ModuleRecord& r) {
    RegistryEvent ev{kind, r.module_id, r.descriptor.module_name, clock_.wall_ms()};
    for (const auto& l : listeners_) l(ev);
}

std::string ModuleRegistry::register_module(const Value& raw, ConnectionId conn) {
    auto parsed = parse_descriptor(raw);
    if (!parsed.value)
        throw RegistryError(RegistryErrc::InvalidDescriptor, "descriptor is malformed", std::move(parsed.violations));
    return register_module(*parsed.value, conn);
}

std::string ModuleRegistry::register_module(const ModuleDescriptor& d, ConnectionId conn) {
    if (auto vs = validate_descriptor(d); !vs.empty())
        throw RegistryError(RegistryErrc::InvalidDescriptor, "descriptor failed validation", std::move(vs));

    std::unique_lock lock(mu_);
    for (auto it = records_.begin(); it != records_.end();) {
        auto cur = it++;
        if (cur->second.descriptor.module_name != d.module_name) continue;
        if (cur->second.live())
            throw RegistryError(RegistryErrc::DuplicateName,
                                "\"" + d.module_name + "\" is held by live module " + cur->second.module_id);
        // A stale holder is superseded by the newcomer.
        unregister_locked(cur->first);
    }

    std::uint64_t n = ++counter_;
    ModuleRecord r;
    r.module_id = "m-" + std::to_string(n);
    r.descriptor = d;
    r.connection_id = conn;
    r.status = ModuleStatus::Ready;
    r.last_heartbeat = clock_.steady_ms();
    r.registered_at = clock_.wall_ms();
    auto& stored = records_.emplace(n, std::move(r)).first->second;
    emit(RegistryEventKind::Registered, stored);
    return stored.module_id;
}

void ModuleRegistry::heartbeat(const std::string& module_id, ModuleStatus status) {
    if (status != ModuleStatus::Ready && status != ModuleStatus::Busy)
        throw Error("InvalidStatus", "heartbeats report READY or BUSY");
    std::unique_lock lock(mu_);
    auto key = key_of(module_id);
    auto it = key ? records_.find(*key) : records_.end();
    if (it == records_.end()) throw RegistryError(RegistryErrc::UnknownModule, module_id);
    auto& r = it->second;
    r.last_heartbeat = clock_.steady_ms();
    if (r.status == ModuleStatus::Faulted) return;
    bool recovered = r.status == ModuleStatus::Offline;
    r.status = status;
    if (recovered) emit(RegistryEventKind::Recovered, r);
}

std::vector<std::string> ModuleRegistry::sweep_stale(std::int64_t now) {
    std::vector<std::string> out;
    std::unique_lock lock(mu_);
    for (auto& [n, r] : records_) {
        if (r.status == ModuleStatus::Offline) continue;
        if (now - r.last_heartbeat > kStaleFactor * r.descriptor.heartbeat_interval_ms) {
            r.status = ModuleStatus::Offline;
            out.push_back(r.module_id);
            emit(RegistryEventKind::Offline, r);
        }
    }
    return out;
}

std::string ModuleRegistry::resolve_capability(const std::string& capability, Role role) const {
    std::shared_lock lock(mu_);
    for (const auto& [n, r] : records_) {
        if (!r.live()) continue;
        const auto* c = r.descriptor.find(capability);
        if (c && c->role == role) return r.module_id;
    }
    throw RegistryError(RegistryErrc::NoProvider,
                        "no live provider of " + capability + " (" + to_string(role) + ")");
}

void ModuleRegistry::unregister_locked(std::uint64_t key) {
    auto it = records_.find(key);
    ModuleRecord r = std::move(it->second);
    records_.erase(it);
    emit(RegistryEventKind::Unregistered, r);
}

void ModuleRegistry::unregister(const std::string& module_id) {
    std::unique_lock lock(mu_);
    auto key = key_of(module_id);
    if (!key || !records_.count(*key)) throw RegistryError(RegistryErrc::UnknownModule, module_id);
    unregister_locked(*key);
}

std::optional<std::string> ModuleRegistry::connection_closed(ConnectionId conn) {
    std::unique_lock lock(mu_);
    for (auto& [n, r] : records_) {
        if (r.connection_id != conn) continue;
        std::string id = r.module_id;
        unregister_locked(n);
        return id;
    }
    return std::nullopt;
}

void ModuleRegistry::mark_faulted(const std::string& module_id) {
    std::unique_lock lock(mu_);
    auto key = key_of(module_id);
    auto it = key ? records_.find(*key) : records_.end();
    if (it == records_.end()) throw RegistryError(RegistryErrc::UnknownModule, module_id);
    if (it->second.status == ModuleStatus::Faulted) return;
    it->second.status = ModuleStatus::Faulted;
    emit(RegistryEventKind::Faulted, it->second);
}

std::optional<ModuleRecord> ModuleRegistry::find(const std::string& module_id) const {
    std::shared_lock lock(mu_);
    auto key = key_of(module_id);
    if (!key) return std::nullopt;
    auto it = records_.find(*key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<ModuleRecord> ModuleRegistry::list() const {
    std::shared_lock lock(mu_);
    std::vector<ModuleRecord> out;
    for (const auto& [n, r] : records_) out.push_back(r);
    return out;
}

std::optional<CapabilitySchema> ModuleRegistry::lookup(const std::string& capability, Role role) const {
    std::shared_lock lock(mu_);
    for (const auto& [n, r] : records_) {
        const auto* c = r.descriptor.find(capability);
        if (c && c->role == role) return *c;
    }
    return std::nullopt;
}

bool ModuleRegistry::has_live_provider(const std::string& capability, Role role) const {
    try {
        resolve_capability(capability, role);
        return true;
    } catch (const RegistryError&) {
        return false;
    }
}

}  // namespace aeos
