#include "gnarx/stochastic.hpp"

#include <algorithm>
#include <cmath>

#include "gnarx/errors.hpp"
#include "gnarx/forecaster.hpp"
#include "gnarx/parallel.hpp"

namespace gnarx {

namespace {

constexpr double kOverflow = 1e100;

Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& source, int count, std::mt19937_64& engine) {
    std::uniform_int_distribution<Eigen::Index> pick(0, source.cols() - 1);
    Eigen::MatrixXd out(source.rows(), count);
    for (int c = 0; c < count; ++c) out.col(c) = source.col(pick(engine));
    return out;
}

}  // namespace

std::mt19937_64 RngSpec::engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd NoiseSpec::draw(int num_nodes, int count, std::mt19937_64& engine) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(num_nodes, count);
    for (int c = 0; c < count; ++c) {
        for (int i = 0; i < num_nodes; ++i) z(i, c) = normal(engine);
    }
    if (!covariance) return sd * z;
    if (covariance->rows() != num_nodes || covariance->cols() != num_nodes) {
        throw DimensionError("noise covariance must be N x N");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(*covariance);
    if (llt.info() != Eigen::Success) throw ValidationError("noise covariance is not positive definite");
    return llt.matrixL() * z;
}

Eigen::MatrixXd propagate(const ParameterVector& params, const Network& net, const Eigen::MatrixXd& start,
                          const std::vector<Eigen::MatrixXd>& x, const Eigen::MatrixXd& innovations) {
    const auto& order = params.layout.order();
    const int p_star = order.max_lag();
    const auto n = start.rows();
    const auto steps = innovations.cols();
    if (start.cols() != p_star || innovations.rows() != n) throw DimensionError("start block must be N x p*");
    if (static_cast<int>(x.size()) != order.num_exogenous()) {
        throw DimensionError("exogenous regressor count does not match the model order");
    }
    for (const auto& xh : x) {
        if (xh.rows() != n || xh.cols() != p_star + steps) {
            throw DimensionError("exogenous values must be N x (p* + steps)");
        }
    }

    const VarxCoefficients coef = assemble_coefficients(order, params, net);
    Eigen::MatrixXd out(n, p_star + steps);
    out.leftCols(p_star) = start;
    for (Eigen::Index c = 0; c < steps; ++c) {
        const Eigen::Index t = p_star + c;
        Eigen::VectorXd next = innovations.col(c);
        for (int k = 1; k <= order.p; ++k) {
            next.noalias() += coef.phi[static_cast<std::size_t>(k - 1)] * out.col(t - k);
        }
        for (int h = 0; h < order.num_exogenous(); ++h) {
            for (int j = 0; j <= order.p_prime[static_cast<std::size_t>(h)]; ++j) {
                next += params.lambda(h, j) * x[static_cast<std::size_t>(h)].col(t - j);
            }
        }
        if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kOverflow) {
            throw DivergenceError("simulation diverged at step " + std::to_string(c + 1), static_cast<int>(c + 1));
        }
        out.col(t) = next;
    }
    return out;
}

SimulatedData simulate(const ModelOrder& order, const ParameterVector& params, const Network& net, int T,
                       const std::vector<Eigen::MatrixXd>& exogenous, RngSpec rng,
                       const SimulationOptions& options) {
    if (T < 1) throw ValidationError("simulation length must be >= 1");
    if (options.burn_in < 0) throw ValidationError("burn-in must be >= 0");
    if (params.layout.order() != order) throw ValidationError("parameter layout does not match the model order");
    const int n = net.num_nodes();
    const int p_star = order.max_lag();
    const int total = options.burn_in + T;
    auto engine = rng.engine();

    std::vector<Eigen::MatrixXd> x;
    if (exogenous.empty()) {
        const NoiseSpec standard;
        for (int h = 0; h < order.num_exogenous(); ++h) x.push_back(standard.draw(n, p_star + total, engine));
    } else {
        if (static_cast<int>(exogenous.size()) != order.num_exogenous()) {
            throw DimensionError("exogenous regressor count does not match the model order");
        }
        for (const auto& e : exogenous) {
            if (e.rows() != n || e.cols() != T) throw DimensionError("supplied regressors must be N x T");
            Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(n, p_star + total);
            padded.rightCols(T) = e;
            x.push_back(std::move(padded));
        }
    }
    const Eigen::MatrixXd innovations = options.noise.draw(n, total, engine);
    const Eigen::MatrixXd path = propagate(params, net, Eigen::MatrixXd::Zero(n, p_star), x, innovations);

    SimulatedData out{Panel::monthly(net.nodes(), options.start, path.rightCols(T)), {}};
    for (const auto& xh : x) out.exogenous.push_back(Panel::monthly(net.nodes(), options.start, xh.rightCols(T)));
    return out;
}

ProcessSpec five_node_process() {
    const ModelOrder order{1, {1}, {1}, AlphaMode::local};
    ParameterVector params = ParameterVector::zeros(order, 5);
    const double alphas[] = {0.4, 0.2, 0.4, 0.2, 0.2};
    for (int i = 0; i < 5; ++i) params.alpha(i, 1) = alphas[i];
    params.beta(1, 1) = 0.5;
    params.lambda(0, 0) = 0.4;
    params.lambda(0, 1) = 0.2;
    return {order, params, five_node_network()};
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IntervalReport bootstrap_intervals(const ModelOrder& order, const Panel& panel, const std::vector<Panel>& exogenous,
                                   const Network& net, const std::vector<Eigen::MatrixXd>& future,
                                   const BootstrapOptions& options, RngSpec rng) {
    if (options.replicates < 1) throw ValidationError("bootstrap needs at least one replicate");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    const int horizon = options.horizon;
    if (horizon < 1) throw ValidationError("forecast horizon must be >= 1");
    if (future.size() != exogenous.size()) throw DimensionError("future paths must be given for every regressor");

    FitOptions fit_options = options.fit;
    fit_options.standard_errors = false;
    fit_options.first_target.reset();
    const FitResult fit = fit_gnarx(order, panel, exogenous, net, fit_options);

    const int n = panel.num_nodes();
    const int t_total = panel.num_times();
    const int p_star = order.max_lag();

    std::vector<Eigen::MatrixXd> x_full;
    std::vector<MaskMatrix> x_mask;
    std::vector<Eigen::MatrixXd> x_history;
    for (std::size_t h = 0; h < exogenous.size(); ++h) {
        if (future[h].rows() != n || future[h].cols() < horizon) {
            throw ValidationError("scenario is shorter than the forecast horizon");
        }
        const Eigen::MatrixXd filled = exogenous[h].zero_filled();
        Eigen::MatrixXd values(n, t_total + horizon);
        values << exogenous[h].values(), future[h].leftCols(horizon);
        MaskMatrix mask(n, t_total + horizon);
        mask << exogenous[h].observed(), MaskMatrix::Constant(n, horizon, true);
        x_full.push_back(std::move(values));
        x_mask.push_back(std::move(mask));
        x_history.push_back(filled);
    }

    const Eigen::MatrixXd& y = panel.values();
    const MaskMatrix& y_obs = panel.observed();
    const Eigen::MatrixXd y_filled = panel.zero_filled();
    const ParameterVector& gamma = fit.gamma_hat;

    IntervalReport report;
    report.alpha = options.alpha;
    report.point = iterate_forecasts(gamma, net, y, y_obs, x_full, x_mask, horizon);

    std::vector<std::optional<Eigen::MatrixXd>> errors(static_cast<std::size_t>(options.replicates));
    parallel_for(options.replicates, options.threads, [&](int b) {
        auto engine = rng.with_stream(static_cast<std::uint64_t>(b)).engine();
        std::uniform_int_distribution<int> start_pick(0, t_total - p_star);
        const int k = start_pick(engine);
        const Eigen::MatrixXd innovations = resample_columns(fit.residuals, t_total - p_star, engine);
        const Eigen::MatrixXd ahead = resample_columns(fit.residuals, horizon, engine);
        try {
            const Eigen::MatrixXd path =
                propagate(gamma, net, y_filled.middleCols(k, p_star), x_history, innovations);
            const Panel boot(panel.nodes(), panel.times(), path);
            const FitResult refit = fit_gnarx(order, boot, exogenous, net, fit_options);
            const Eigen::MatrixXd predicted =
                iterate_forecasts(refit.gamma_hat, net, y, y_obs, x_full, x_mask, horizon);
            const Eigen::MatrixXd simulated = iterate_forecasts(gamma, net, y, y_obs, x_full, x_mask, horizon, &ahead);
            errors[static_cast<std::size_t>(b)] = simulated - predicted;
        } catch (const NumericalError&) {
            // counted as a dropped replicate below
        }
    });

    std::vector<const Eigen::MatrixXd*> kept;
    for (const auto& e : errors) {
        if (e) kept.push_back(&*e);
    }
    report.replicates = static_cast<int>(kept.size());
    report.dropped = options.replicates - report.replicates;
    if (kept.empty() || report.dropped > options.max_drop_fraction * options.replicates) {
        throw NumericalError("bootstrap failed: " + std::to_string(report.dropped) + " of " +
                             std::to_string(options.replicates) + " replicate refits were singular or diverged");
    }

    report.lower.resize(n, horizon);
    report.upper.resize(n, horizon);
    std::vector<double> sample(kept.size());
    for (int i = 0; i < n; ++i) {
        for (int h = 0; h < horizon; ++h) {
            for (std::size_t b = 0; b < kept.size(); ++b) sample[b] = (*kept[b])(i, h);
            report.lower(i, h) = report.point(i, h) + quantile(sample, options.alpha / 2.0);
            report.upper(i, h) = report.point(i, h) + quantile(sample, 1.0 - options.alpha / 2.0);
        }
    }
    report.paths.reserve(kept.size());
    for (const auto* e : kept) report.paths.push_back(report.point + *e);
    return report;
}

}  // namespace gnarx
