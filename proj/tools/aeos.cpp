// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// aeos serve   run the core: HTTP API plus the module listener
// aeos export  write one campaign's data from a journal on disk

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aeos/config.hpp"
#include "aeos/core.hpp"
#include "aeos/gateway.hpp"
#include "aeos/module_server.hpp"
#include "aeos/persistence.hpp"

namespace {

aeos::SettingsLayer load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw aeos::Error("InvalidConfig", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return aeos::settings_from_config(aeos::parse_json(ss.str()));
}

aeos::SettingsLayer from_env() {
    return aeos::settings_from_env([](const char* n) { return std::getenv(n); });
}

int serve(const aeos::SettingsLayer& cli, const std::string& config_path) {
    auto s = aeos::merge_settings(cli, from_env(), load_config(config_path));

    // Block the shutdown signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    aeos::CoreOptions opts;
    opts.data_dir = s.data_dir;
    aeos::Core core(opts);
    for (const auto& note : core.recovery_notes()) std::cerr << "aeos: " << note << "\n";

    aeos::ModuleServer modules(core.dispatcher(), s.bind, s.module_port);
    aeos::GatewayOptions gopts;
    gopts.bind = s.bind;
    gopts.port = s.http_port;
    gopts.ui_dir = s.ui_dir;
    aeos::Gateway gateway(core, gopts);
    gateway.start();

    std::cerr << "aeos: http " << s.bind << ":" << gateway.port() << ", modules " << s.bind << ":" << modules.port()
              << ", data " << s.data_dir << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "aeos: shutting down (signal " << sig << ")" << std::endl;
    gateway.stop();
    modules.stop();
    return 0;
}

int export_campaign(const std::string& data_dir, const std::string& campaign, const std::string& format,
                    const std::string& out) {
    auto fmt = aeos::export_format_from(format);
    if (!fmt) throw aeos::Error("InvalidArgument", "format must be csv or json");
    std::string doc = aeos::export_from_journal(data_dir, campaign, *fmt);
    if (out.empty() || out == "-") {
        std::cout << doc;
        return 0;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << doc;
    if (!f) throw aeos::Error("IoFailure", "cannot write " + out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aeos: autonomous experimentation orchestration core"};
    app.require_subcommand(1);

    auto* serve_cmd = app.add_subcommand("serve", "run the core");
    std::string bind, data_dir, ui_dir, config;
    int http_port = 0, module_port = 0;
    auto* o_bind = serve_cmd->add_option("--bind", bind, "listen address (default 127.0.0.1)");
    auto* o_http = serve_cmd->add_option("--http-port", http_port, "HTTP API port (default 8080)")->check(CLI::Range(0, 65535));
    auto* o_mod = serve_cmd->add_option("--module-port", module_port, "module TCP port (default 7410)")
                      ->check(CLI::Range(0, 65535));
    auto* o_data = serve_cmd->add_option("--data-dir", data_dir, "journal directory (default ./aeos-data)");
    auto* o_ui = serve_cmd->add_option("--ui-dir", ui_dir, "static web UI served at /");
    serve_cmd->add_option("--config", config, "JSON config file mirroring the flags")->envname("AEOS_CONFIG");

    auto* export_cmd = app.add_subcommand("export", "export one campaign from a journal");
    std::string campaign, format = "json", out, export_data_dir, export_config;
    export_cmd->add_option("--campaign", campaign, "campaign id")->required();
    export_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    export_cmd->add_option("--out", out, "output path (default stdout)");
    auto* o_export_data = export_cmd->add_option("--data-dir", export_data_dir, "journal directory");
    export_cmd->add_option("--config", export_config, "JSON config file")->envname("AEOS_CONFIG");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve_cmd->parsed()) {
            aeos::SettingsLayer cli;
            if (o_bind->count()) cli.bind = bind;
            if (o_http->count()) cli.http_port = static_cast<std::uint16_t>(http_port);
            if (o_mod->count()) cli.module_port = static_cast<std::uint16_t>(module_port);
            if (o_data->count()) cli.data_dir = data_dir;
            if (o_ui->count()) cli.ui_dir = ui_dir;
            return serve(cli, config);
        }
        aeos::SettingsLayer cli;
        if (o_export_data->count()) cli.data_dir = export_data_dir;
        auto s = aeos::merge_settings(cli, from_env(), load_config(export_config));
        return export_campaign(s.data_dir, campaign, format, out);
    } catch (const std::exception& e) {
        std::cerr << "aeos: " << e.what() << "\n";
        return 1;
    }
}
