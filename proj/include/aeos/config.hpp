// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// `aeos serve` settings. Precedence, highest first: command line, AEOS_*
// environment variables, the JSON config file, built-in defaults.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "aeos/value.hpp"

namespace aeos {

struct ServeSettings {
    std::string bind = "127.0.0.1";
    std::uint16_t http_port = 8080;
    std::uint16_t module_port = 7410;
    std::string data_dir = "aeos-data";
    std::string ui_dir;
};

/// One source of settings; unset fields defer to the next layer.
struct SettingsLayer {
    std::optional<std::string> bind;
    std::optional<std::uint16_t> http_port;
    std::optional<std::uint16_t> module_port;
    std::optional<std::string> data_dir;
    std::optional<std::string> ui_dir;
};

/// Reads AEOS_BIND, AEOS_HTTP_PORT, AEOS_MODULE_PORT, AEOS_DATA_DIR and
/// AEOS_UI_DIR through `getenv`. Throws aeos::Error("InvalidConfig").
SettingsLayer settings_from_env(const std::function<const char*(const char*)>& getenv);

/// Keys mirror the flags: bind, http_port, module_port, data_dir, ui_dir.
/// Unknown keys and wrong types throw aeos::Error("InvalidConfig").
SettingsLayer settings_from_config(const Value& doc);

ServeSettings merge_settings(const SettingsLayer& cli, const SettingsLayer& env, const SettingsLayer& file);

}  // namespace aeos
