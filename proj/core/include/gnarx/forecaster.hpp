#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnarx/estimator.hpp"

namespace gnarx {

/// Iterated forecasts for panel columns T..T+horizon-1 given a history of T
/// columns. Exogenous matrices must cover T + horizon columns. Forecasts are
/// fed back as fully observed history; `innovations` (N x horizon) is added to
/// each step when supplied, which turns the recursion into a simulation.
[[nodiscard]] Eigen::MatrixXd iterate_forecasts(const ParameterVector& params, const Network& net,
                                                const Eigen::MatrixXd& y, const MaskMatrix& y_observed,
                                                const std::vector<Eigen::MatrixXd>& x,
                                                const std::vector<MaskMatrix>& x_observed, int horizon,
                                                const Eigen::MatrixXd* innovations = nullptr);

/// Prediction for panel column `target` from columns before it and exogenous
/// values up to and including it.
[[nodiscard]] Eigen::VectorXd forecast_one_step(const ParameterVector& params, const Network& net, const Panel& panel,
                                                const std::vector<Panel>& exogenous, int target);

/// Future regressor paths for a scenario: per regressor name, per node, the
/// level values for the months following the forecast origin.
struct ScenarioPath {
    std::string label;
    std::map<std::string, std::map<std::string, std::vector<double>>> paths;
};

[[nodiscard]] ScenarioPath read_scenario_json(std::istream& in);
[[nodiscard]] ScenarioPath load_scenario_json(const std::filesystem::path& path);
void write_scenario_json(std::ostream& out, const ScenarioPath& scenario);

/// Path moving linearly from `start` (the origin value) to `end` over `horizon`
/// steps; the origin itself is not included.
[[nodiscard]] std::vector<double> linear_path(double start, double end, int horizon);

/// How a regressor's levels are turned into model inputs.
struct RegressorTransform {
    bool difference = false;
    std::vector<NodeScale> scales;  // empty: no standardisation
};

/// Model-space future values (N x horizon) of one regressor. Nodes absent from
/// the scenario keep their last observed level.
[[nodiscard]] Eigen::MatrixXd future_regressor(const ScenarioPath& scenario, const std::string& name,
                                               const Panel& levels, const RegressorTransform& transform,
                                               int horizon);

/// Iterated forecasts from the end of the panel with known future regressors
/// (one N x horizon matrix per regressor, in model space).
[[nodiscard]] Eigen::MatrixXd forecast_scenario(const ParameterVector& params, const Network& net, const Panel& panel,
                                                const std::vector<Panel>& exogenous,
                                                const std::vector<Eigen::MatrixXd>& future, int horizon);

struct ForecastRecord {
    int node = 0;
    CalendarStamp date;
    double point = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<double> realized;
};

struct ForecastReport {
    std::string model;
    std::vector<ForecastRecord> records;
    double msfe = 0.0;
    double msfe_se = 0.0;
    int count = 0;  // number of squared errors
};

/// Fills msfe, msfe_se and count from the records that have a realized value.
void summarize(ForecastReport& report);

void write_forecast_csv(std::ostream& out, const ForecastReport& report, const std::vector<std::string>& nodes);
void save_forecast_csv(const std::filesystem::path& path, const ForecastReport& report,
                       const std::vector<std::string>& nodes);

/// One-step forecasts with fixed parameters for targets in [first, last).
[[nodiscard]] ForecastReport evaluate_fixed(const ParameterVector& params, const Network& net, const Panel& panel,
                                            const std::vector<Panel>& exogenous, int first, int last);

struct EvaluationOptions {
    FitOptions fit{EstimationMethod::fgls, std::nullopt, false};
    bool refit = false;      // re-estimate before every forecast
    bool in_sample = false;  // estimate once on the whole panel
};

/// Estimates on months before `split`, then rolls one-step forecasts over the
/// remaining months.
[[nodiscard]] ForecastReport rolling_evaluation(const ModelOrder& order, const Panel& panel,
                                                const std::vector<Panel>& exogenous, const Network& net,
                                                const CalendarStamp& split, const EvaluationOptions& options = {});

/// Unrestricted VAR(p) fitted equation by equation.
struct VarBaseline {
    int p = 1;
    bool intercept = false;
    Eigen::MatrixXd coefficients;  // N x (N p), lag-major blocks
    Eigen::VectorXd constant;      // zero unless intercept

    [[nodiscard]] int num_coefficients() const noexcept {
        return static_cast<int>(coefficients.size() + (intercept ? constant.size() : 0));
    }
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& y, int target) const;
};

[[nodiscard]] VarBaseline fit_var_baseline(const Panel& panel, int p, bool intercept = false);
/// Per-node AR(1) coefficients without intercept.
[[nodiscard]] Eigen::VectorXd fit_ar_baseline(const Panel& panel);

[[nodiscard]] ForecastReport evaluate_var(const Panel& panel, const CalendarStamp& split, int p, bool intercept = false);
[[nodiscard]] ForecastReport evaluate_ar(const Panel& panel, const CalendarStamp& split);
[[nodiscard]] ForecastReport evaluate_naive(const Panel& panel, const CalendarStamp& split);

/// Column index of `split`, required to lie strictly inside the panel.
[[nodiscard]] int split_column(const Panel& panel, const CalendarStamp& split);

}  // namespace gnarx
