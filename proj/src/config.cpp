// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/config.hpp"

#include <charconv>

namespace aeos {

namespace {

std::uint16_t port_from(std::int64_t v, const std::string& where) {
    if (v < 0 || v > 65535) throw Error("InvalidConfig", where + " must be a port number");
    return static_cast<std::uint16_t>(v);
}

std::uint16_t port_from_text(const std::string& s, const std::string& where) {
    std::int64_t v = -1;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error("InvalidConfig", where + " must be a port number");
    return port_from(v, where);
}

template <class T>
const T& pick(const std::optional<T>& a, const std::optional<T>& b, const std::optional<T>& c, const T& fallback) {
    return a ? *a : b ? *b : c ? *c : fallback;
}

}  // namespace

SettingsLayer settings_from_env(const std::function<const char*(const char*)>& getenv) {
    SettingsLayer l;
    auto text = [&](const char* name) -> std::optional<std::string> {
        const char* v = getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    l.bind = text("AEOS_BIND");
    l.data_dir = text("AEOS_DATA_DIR");
    l.ui_dir = text("AEOS_UI_DIR");
    if (auto v = text("AEOS_HTTP_PORT")) l.http_port = port_from_text(*v, "AEOS_HTTP_PORT");
    if (auto v = text("AEOS_MODULE_PORT")) l.module_port = port_from_text(*v, "AEOS_MODULE_PORT");
    return l;
}

SettingsLayer settings_from_config(const Value& doc) {
    if (!doc.is_record()) throw Error("InvalidConfig", "config must be a JSON object");
    SettingsLayer l;
    for (const auto& [k, v] : doc.as_record()) {
        auto text = [&, &k = k, &v = v]() {
            if (!v.is_text()) throw Error("InvalidConfig", k + " must be text");
            return v.as_text();
        };
        auto port = [&, &k = k, &v = v]() {
            if (!v.is_int()) throw Error("InvalidConfig", k + " must be an integer");
            return port_from(v.as_int(), k);
        };
        if (k == "bind")
            l.bind = text();
        else if (k == "http_port")
            l.http_port = port();
        else if (k == "module_port")
            l.module_port = port();
        else if (k == "data_dir")
            l.data_dir = text();
        else if (k == "ui_dir")
            l.ui_dir = text();
        else
            throw Error("InvalidConfig", "unknown key " + k);
    }
    return l;
}

ServeSettings merge_settings(const SettingsLayer& cli, const SettingsLayer& env, const SettingsLayer& file) {
    ServeSettings d;
    ServeSettings s;
    s.bind = pick(cli.bind, env.bind, file.bind, d.bind);
    s.http_port = pick(cli.http_port, env.http_port, file.http_port, d.http_port);
    s.module_port = pick(cli.module_port, env.module_port, file.module_port, d.module_port);
    s.data_dir = pick(cli.data_dir, env.data_dir, file.data_dir, d.data_dir);
    s.ui_dir = pick(cli.ui_dir, env.ui_dir, file.ui_dir, d.ui_dir);
    return s;
}

}  // namespace aeos
