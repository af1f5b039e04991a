#include "gnarx_cli/app.hpp"

#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gnarx/errors.hpp"

namespace gnarx::cli {

namespace {

using Command = std::function<void(CommandContext&)>;

const std::map<std::string, std::pair<std::string, Command>>& commands() {
    static const std::map<std::string, std::pair<std::string, Command>> table{
        {"select", {"Choose a model order by BIC or MSFE search", cmd_select}},
        {"fit", {"Estimate a GNARX model and its standard errors", cmd_fit}},
        {"evaluate", {"Rolling one-step forecast evaluation against comparators", cmd_evaluate}},
        {"forecast", {"Scenario-conditioned point forecasts", cmd_forecast}},
        {"bootstrap", {"Scenario forecasts with bootstrap prediction intervals", cmd_bootstrap}},
        {"simstudy", {"Order-selection simulation study on the five-node process", cmd_simstudy}},
        {"midas", {"Bridge monthly forecasts to quarterly growth projections", cmd_midas}},
    };
    return table;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Network autoregressive modelling with exogenous regressors", "gnarx"};
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;
    auto* seed_option = app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_option("--config", config_path, "JSON configuration or run manifest");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.require_subcommand(1);
    for (const auto& [name, entry] : commands()) app.add_subcommand(name, entry.first)->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunConfig config = config_path.empty() ? parse_config(nlohmann::json::object(), fs::current_path())
                                               : load_config(config_path);
        if (seed_option->count() > 0) config.seed = seed;
        config.raw["seed"] = config.seed;
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw ConfigError("--out: cannot create " + out_dir + ": " + ec.message());

        CommandContext ctx{std::move(config), fs::path(out_dir), threads, out, {}};
        commands().at(command).second(ctx);
        write_manifest(ctx, command);
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace gnarx::cli
