#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gnarx/estimator.hpp"

namespace gnarx {

/// A (seed, stream) pair names an independent, reproducible random sequence.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    [[nodiscard]] std::mt19937_64 engine() const;
    [[nodiscard]] RngSpec with_stream(std::uint64_t s) const { return {seed, s}; }
};

/// Gaussian innovations: i.i.d. N(0, sd^2) or N(0, covariance) when given.
struct NoiseSpec {
    double sd = 1.0;
    std::optional<Eigen::MatrixXd> covariance;

    [[nodiscard]] Eigen::MatrixXd draw(int num_nodes, int count, std::mt19937_64& engine) const;
};

struct SimulationOptions {
    int burn_in = 50;
    NoiseSpec noise;
    CalendarStamp start{2000, 1};
};

struct SimulatedData {
    Panel panel;
    std::vector<Panel> exogenous;
};

/// Runs the GNARX recursion from `start` (N x p*, the first p* columns) under
/// fully observed data. `x` holds one N x (p* + steps) matrix per regressor
/// aligned with the output; `innovations` is N x steps. Returns N x (p* + steps).
[[nodiscard]] Eigen::MatrixXd propagate(const ParameterVector& params, const Network& net,
                                        const Eigen::MatrixXd& start, const std::vector<Eigen::MatrixXd>& x,
                                        const Eigen::MatrixXd& innovations);

/// Simulates T observations after a burn-in started from zero. When `exogenous`
/// is empty and the order has regressors, they are drawn as standard normal;
/// supplied regressors cover the T kept columns and are zero during burn-in.
[[nodiscard]] SimulatedData simulate(const ModelOrder& order, const ParameterVector& params, const Network& net,
                                     int T, const std::vector<Eigen::MatrixXd>& exogenous, RngSpec rng,
                                     const SimulationOptions& options = {});

/// A fully specified data-generating process.
struct ProcessSpec {
    ModelOrder order;
    ParameterVector params;
    Network net;
};

/// GNARX(1,[1],1) on the five-node network with local alphas
/// (0.4, 0.2, 0.4, 0.2, 0.2), beta_{1,1} = 0.5 and lambdas 0.4 (lag 0), 0.2 (lag 1).
[[nodiscard]] ProcessSpec five_node_process();

/// Type-7 sample quantile (linear interpolation between order statistics).
[[nodiscard]] double quantile(std::vector<double> values, double prob);

struct BootstrapOptions {
    int replicates = 1000;
    double alpha = 0.05;
    int horizon = 1;
    FitOptions fit{EstimationMethod::fgls, std::nullopt, false};
    int threads = 1;
    double max_drop_fraction = 0.1;
};

struct IntervalReport {
    Eigen::MatrixXd point;  // N x h
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
    double alpha = 0.05;
    int replicates = 0;  // kept replicates
    int dropped = 0;     // singular refits
    /// Point forecast plus each kept replicate's error, N x h per replicate.
    std::vector<Eigen::MatrixXd> paths;
};

/// Forward bootstrap prediction intervals for the months after the panel end.
/// `future` holds the model-space regressor values (N x horizon) for the
/// forecast months.
[[nodiscard]] IntervalReport bootstrap_intervals(const ModelOrder& order, const Panel& panel,
                                                 const std::vector<Panel>& exogenous, const Network& net,
                                                 const std::vector<Eigen::MatrixXd>& future,
                                                 const BootstrapOptions& options, RngSpec rng);

}  // namespace gnarx
