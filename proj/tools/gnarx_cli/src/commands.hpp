#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace gnarx::cli {

struct CommandContext {
    RunConfig config;
    fs::path out_dir;
    int threads = 1;
    std::ostream& log;
    std::vector<std::string> outputs;  // files written, relative to out_dir

    [[nodiscard]] fs::path output(const std::string& name);
};

void cmd_select(CommandContext& ctx);
void cmd_fit(CommandContext& ctx);
void cmd_evaluate(CommandContext& ctx);
void cmd_forecast(CommandContext& ctx);
void cmd_bootstrap(CommandContext& ctx);
void cmd_midas(CommandContext& ctx);
void cmd_simstudy(CommandContext& ctx);

/// manifest.json: command, seed, config hash, embedded config, format versions
/// and the list of outputs. Contains nothing that varies between reruns.
void write_manifest(CommandContext& ctx, const std::string& command);

}  // namespace gnarx::cli
