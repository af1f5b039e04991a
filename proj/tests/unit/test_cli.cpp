#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "gnarx/panel.hpp"
#include "gnarx/stochastic.hpp"
#include "gnarx_cli/app.hpp"

using namespace gnarx;
using gnarx::fixture::TempDir;
using gnarx::fixture::read_text;
using gnarx::fixture::write_text;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    TempDir dir{"cli"};

    Workspace() {
        const ProcessSpec proc = five_node_process();
        const SimulatedData sim = simulate(proc.order, proc.params, proc.net, 120, {}, RngSpec{11, 0});
        save_panel_csv(dir / "panel.csv", sim.panel);
        save_panel_csv(dir / "rate.csv", sim.exogenous.front());
        std::ofstream edges(dir / "edges.csv");
        write_edge_list_csv(edges, proc.net);
        edges.close();

        std::ostringstream quarterly;
        quarterly << "quarter,growth\n";
        for (int k = 0; k < 40; ++k) {
            const int month = 3 * k;
            const double v = sim.panel.values()(0, month);
            quarterly << 2000 + k / 4 << "-Q" << k % 4 + 1 << ',' << format_double(0.5 * v + 0.1 * ((k % 3) - 1))
                      << '\n';
        }
        write_text(dir / "gdp.csv", quarterly.str());
        write_text(dir / "easing.json",
                   R"j({"label": "easing", "paths": {"rate": {"1": [-0.5, -1, -1.5, -2, -2.5, -3]}}})j");
        write_text(dir / "tightening.json",
                   R"j({"label": "tightening", "paths": {"rate": {"1": [0.5, 1, 1.5, 2, 2.5, 3]}}})j");
    }

    std::string config(const std::string& extra) const {
        nlohmann::json j = nlohmann::json::parse(R"j({
            "panel": "panel.csv",
            "exogenous": [{"name": "rate", "path": "rate.csv"}],
            "network": {"type": "edges", "path": "edges.csv"},
            "horizon": 6,
            "scenarios": ["easing.json", "tightening.json"],
            "bootstrap": {"replicates": 40}
        })j");
        j.update(nlohmann::json::parse(extra));
        const auto path = dir / "config.json";
        write_text(path, j.dump(2));
        return path.string();
    }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    if (out_text != nullptr) *out_text = out.str();
    if (err_text != nullptr) *err_text = err.str();
    return code;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}), cli::exit_ok);
    EXPECT_EQ(run({}), cli::exit_config);
    EXPECT_EQ(run({"nonsense"}), cli::exit_config);
}

TEST(Cli, MissingPanelIsConfigurationError) {
    Workspace ws;
    write_text(ws.dir / "bad.json", R"j({"panel": "absent.csv", "order": {"p": 1, "s": [1], "p_prime": [1]}})j");
    std::string err;
    EXPECT_EQ(run({"--config", (ws.dir / "bad.json").string(), "--out", (ws.dir / "o").string(), "fit"}, nullptr, &err),
              cli::exit_config);
    EXPECT_NE(err.find("panel"), std::string::npos);
}

TEST(Cli, UnknownKeyIsConfigurationError) {
    Workspace ws;
    const auto cfg = ws.config(R"j({"colour": 1})j");
    EXPECT_EQ(run({"--config", cfg, "--out", (ws.dir / "o").string(), "fit"}), cli::exit_config);
}

TEST(Cli, SingletonSearchSelectsTheOnlyCandidate) {
    Workspace ws;
    const auto cfg = ws.config(R"j({"search": {"method": "global", "p_max": 1, "s_max": 0, "p_prime_max": 0}})j");
    const auto out = ws.dir / "sel";
    ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "select"}), cli::exit_ok);
    const auto j = nlohmann::json::parse(read_text(out / "order.json"));
    EXPECT_EQ(j["order"].get<ModelOrder>().to_string(), "(1,[0],0)");
    EXPECT_EQ(j["candidates"].get<int>(), 1);
}

TEST(Cli, SelectFindsGeneratingOrder) {
    Workspace ws;
    const auto cfg = ws.config(R"j({"search": {"method": "global", "p_max": 2, "s_max": 2, "p_prime_max": 2}})j");
    const auto out = ws.dir / "sel";
    ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "select"}), cli::exit_ok);
    const auto j = nlohmann::json::parse(read_text(out / "order.json"));
    EXPECT_EQ(j["order"].get<ModelOrder>().to_string(), "(1,[1],1)");
    EXPECT_TRUE(fs::exists(out / "selection_trace.csv"));
}

TEST(Cli, EveryCommandWritesItsOutputs) {
    Workspace ws;
    const auto cfg = ws.config(R"j({
        "order": {"p": 1, "s": [1], "p_prime": [1]},
        "split": "2008-01",
        "midas": {"quarterly": "gdp.csv", "node": "1"}
    })j");
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
        {"fit", {"fit.json", "residuals.csv"}},
        {"evaluate", {"evaluation.csv", "forecasts_gnarx.csv", "forecasts_var.csv", "forecasts_ar.csv",
                      "forecasts_naive.csv"}},
        {"forecast", {"forecast_easing.csv", "forecast_tightening.csv"}},
        {"bootstrap", {"intervals_easing.csv", "intervals_tightening.csv"}},
        {"midas", {"midas_fit.json", "midas.csv"}},
    };
    for (const auto& [command, files] : cases) {
        const auto out = ws.dir / command;
        std::string err;
        ASSERT_EQ(run({"--config", cfg, "--out", out.string(), command}, nullptr, &err), cli::exit_ok)
            << command << ": " << err;
        const auto manifest = nlohmann::json::parse(read_text(out / "manifest.json"));
        EXPECT_EQ(manifest["command"].get<std::string>(), command);
        for (const auto& f : files) {
            EXPECT_TRUE(fs::exists(out / f)) << command << " " << f;
            EXPECT_NE(std::find(manifest["outputs"].begin(), manifest["outputs"].end(), f), manifest["outputs"].end());
        }
    }
    const auto fit = nlohmann::json::parse(read_text(ws.dir / "fit" / "fit.json"));
    EXPECT_EQ(fit["parameters"].size(), 8u);
}

TEST(Cli, ReRunsAreByteIdentical) {
    Workspace ws;
    const auto cfg = ws.config(R"j({"order": {"p": 1, "s": [1], "p_prime": [1]}, "midas": {"quarterly": "gdp.csv", "node": "1"}})j");
    const auto a = ws.dir / "a";
    const auto b = ws.dir / "b";
    const auto c = ws.dir / "c";
    ASSERT_EQ(run({"--config", cfg, "--seed", "5", "--out", a.string(), "midas"}), cli::exit_ok);
    ASSERT_EQ(run({"--config", cfg, "--seed", "5", "--out", b.string(), "--threads", "2", "midas"}), cli::exit_ok);
    ASSERT_EQ(run({"--config", (a / "manifest.json").string(), "--out", c.string(), "midas"}), cli::exit_ok);
    for (const char* f : {"midas.csv", "midas_fit.json", "manifest.json"}) {
        EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
        EXPECT_EQ(read_text(a / f), read_text(c / f)) << f;
    }
    const auto d = ws.dir / "d";
    ASSERT_EQ(run({"--config", cfg, "--seed", "6", "--out", d.string(), "midas"}), cli::exit_ok);
    EXPECT_NE(read_text(a / "midas.csv"), read_text(d / "midas.csv"));
}
