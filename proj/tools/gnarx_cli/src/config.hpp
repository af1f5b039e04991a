#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnarx/forecaster.hpp"
#include "gnarx/midas.hpp"
#include "gnarx/selector.hpp"

namespace gnarx::cli {

namespace fs = std::filesystem;

struct ExogenousSource {
    std::string name;
    fs::path path;
    bool difference = false;
    std::optional<CalendarStamp> zero_before;
    bool standardize = false;
};

struct NetworkSource {
    std::string type = "edges";  // edges | fully_connected | nearest_neighbour | none | five_node
    fs::path path;
    bool allow_tie_break = false;
};

struct SearchConfig {
    SearchSpace space;
    std::string method = "stagewise";  // stagewise | global | msfe
    int fit_months = 180;
    int eval_months = 60;
    StageOneTerms stage_one = StageOneTerms::saturated;
};

struct EvaluationConfig {
    bool refit = false;
    bool in_sample = false;
    std::vector<std::string> comparators{"var", "ar", "naive"};
    int var_p = 2;
    bool var_intercept = false;
};

struct MidasConfig {
    fs::path quarterly;
    std::string node;
    MidasSpec spec;
    std::vector<QuarterStamp> quarters;
};

struct SimstudyConfig {
    int replicates = 1000;
    std::vector<int> lengths{64, 128, 256};
    std::vector<std::string> methods{"global", "stagewise"};
    StageOneTerms stage_one = StageOneTerms::saturated;
    SearchSpace global{3, 3, 3, AlphaMode::local};
    SearchSpace stagewise{12, 3, 3, AlphaMode::local};
};

struct RunConfig {
    nlohmann::json raw;
    fs::path base_dir;
    std::uint64_t seed = 1;

    std::optional<fs::path> panel;
    bool standardize = false;
    std::vector<ExogenousSource> exogenous;
    NetworkSource network;
    std::optional<ModelOrder> order;
    std::optional<SearchConfig> search;
    std::optional<CalendarStamp> split;
    EstimationMethod estimation = EstimationMethod::fgls;
    EvaluationConfig evaluation;
    int horizon = 6;
    std::vector<fs::path> scenarios;
    int replicates = 1000;
    double alpha = 0.05;
    std::optional<MidasConfig> midas;
    SimstudyConfig simstudy;
};

/// Parses a configuration (or a run manifest, which embeds one). Relative
/// paths resolve against `base_dir`. Throws ConfigError naming the field.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j, const fs::path& base_dir);
[[nodiscard]] RunConfig load_config(const fs::path& path);

/// Data prepared for modelling: target and regressors share one calendar.
struct LoadedData {
    Panel panel;                          // model space
    std::vector<NodeScale> panel_scales;  // empty unless standardised
    std::vector<Panel> exogenous;         // model space
    std::vector<Panel> exogenous_levels;  // raw levels on the same calendar
    std::vector<RegressorTransform> transforms;
    std::vector<std::string> regressor_names;
    Network network;
};

[[nodiscard]] LoadedData load_data(const RunConfig& config);

/// The months before `split` (all months when no split is set).
[[nodiscard]] LoadedData in_sample(const LoadedData& data, const std::optional<CalendarStamp>& split);

/// Model-space panel mapped back to the original units.
[[nodiscard]] Panel to_levels(const LoadedData& data, const Panel& model_space);

/// 64-bit FNV-1a hash of the text, as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(const std::string& text);

}  // namespace gnarx::cli
