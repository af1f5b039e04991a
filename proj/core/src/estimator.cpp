#include "gnarx/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gnarx/errors.hpp"

namespace gnarx {

namespace {

constexpr double kLeverageCeiling = 1.0 - 1e-10;

// Design block with rows of unobserved targets zeroed.
Eigen::MatrixXd masked_block(const LinearSystem& system, int t) {
    Eigen::MatrixXd x = system.design[static_cast<std::size_t>(t)];
    for (int i = 0; i < system.num_nodes(); ++i) {
        if (!system.observed(i, t)) x.row(i).setZero();
    }
    return x;
}

Eigen::VectorXd masked_target(const LinearSystem& system, int t) {
    Eigen::VectorXd y = system.targets.col(t);
    for (int i = 0; i < system.num_nodes(); ++i) {
        if (!system.observed(i, t)) y(i) = 0.0;
    }
    return y;
}

void check_system(const LinearSystem& system) {
    if (system.design.empty()) throw DimensionError("empty regression system");
    if (static_cast<int>(system.design.size()) != system.effective_T() ||
        system.observed.rows() != system.targets.rows() || system.observed.cols() != system.targets.cols()) {
        throw DimensionError("regression system blocks, targets and mask disagree in size");
    }
    int observed = 0;
    for (Eigen::Index i = 0; i < system.observed.size(); ++i) observed += system.observed.data()[i] ? 1 : 0;
    if (system.num_params() > observed) {
        throw SingularityError("more parameters (" + std::to_string(system.num_params()) + ") than observed targets (" +
                               std::to_string(observed) + ")");
    }
}

// Solves a symmetric normal system, reporting rank-deficient columns.
Eigen::MatrixXd solve_normal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) {
        const auto deficient = qr.colsPermutation().indices().tail(a.cols() - qr.rank());
        std::vector<int> columns(deficient.data(), deficient.data() + deficient.size());
        std::sort(columns.begin(), columns.end());
        std::string list;
        for (int c : columns) list += (list.empty() ? "" : ",") + std::to_string(c);
        throw SingularityError("rank-deficient normal matrix (rank " + std::to_string(qr.rank()) + " of " +
                                   std::to_string(a.cols()) + "); deficient columns: " + list,
                               std::move(columns));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    return qr.solve(b);
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& a) {
    return solve_normal(a, Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

Eigen::MatrixXd precision_of(const Eigen::MatrixXd& sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularityError("innovation covariance is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
}

double log_det_of(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    double total = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double v = eig.eigenvalues()(i);
        if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
        total += std::log(v);
    }
    return total;
}

}  // namespace

LinearSystem make_system(const RegressionData& data) {
    return {data.design, data.y, data.target_observed};
}

LinearSystem restricted_system(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                               const MaskMatrix& observed) {
    const auto n = y.rows();
    const auto k = z.rows();
    if (z.cols() != y.cols() || r.rows() != n * k || observed.rows() != n || observed.cols() != y.cols()) {
        throw DimensionError("Y, Z, R and mask dimensions are inconsistent");
    }
    LinearSystem system;
    system.targets = y;
    system.observed = observed;
    system.design.reserve(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
        // (Z_t' kron I_N) R: row i collects R rows i + N m weighted by Z_t(m).
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n, r.cols());
        for (Eigen::Index m = 0; m < k; ++m) {
            const double zm = z(m, t);
            if (zm != 0.0) block += zm * r.middleRows(n * m, n);
        }
        system.design.push_back(std::move(block));
    }
    return system;
}

OlsFit fit_ols(const LinearSystem& system) {
    check_system(system);
    const int m = system.num_params();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int t = 0; t < system.effective_T(); ++t) {
        const Eigen::MatrixXd x = masked_block(system, t);
        a.noalias() += x.transpose() * x;
        b.noalias() += x.transpose() * masked_target(system, t);
    }
    OlsFit fit;
    fit.gamma = solve_normal(a, b);
    fit.residuals = residuals_of(system, fit.gamma);
    return fit;
}

OlsFit fit_ols(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
               const MaskMatrix& observed) {
    return fit_ols(restricted_system(y, z, r, observed));
}

Eigen::MatrixXd residuals_of(const LinearSystem& system, const Eigen::VectorXd& gamma) {
    Eigen::MatrixXd out(system.num_nodes(), system.effective_T());
    for (int t = 0; t < system.effective_T(); ++t) {
        out.col(t) = system.targets.col(t) - system.design[static_cast<std::size_t>(t)] * gamma;
        for (int i = 0; i < system.num_nodes(); ++i) {
            if (!system.observed(i, t)) out(i, t) = 0.0;
        }
    }
    return out;
}

Eigen::MatrixXd estimate_sigma_u(const Eigen::MatrixXd& residuals, int effective_T) {
    if (effective_T < 1) throw DimensionError("effective sample length must be positive");
    return residuals * residuals.transpose() / static_cast<double>(effective_T);
}

RegularizedCovariance regularize_covariance(const Eigen::MatrixXd& sigma) {
    const double n = static_cast<double>(sigma.rows());
    const double trace = sigma.trace();
    if (!(trace > 0.0)) return {Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()), true};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= 1e12) return {sigma, false};
    Eigen::MatrixXd ridged = sigma;
    ridged.diagonal().array() += 1e-8 * trace / n;
    return {std::move(ridged), true};
}

Eigen::VectorXd fit_fgls(const LinearSystem& system, const Eigen::MatrixXd& sigma_u) {
    check_system(system);
    const Eigen::MatrixXd precision = precision_of(regularize_covariance(sigma_u).sigma);
    const int m = system.num_params();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int t = 0; t < system.effective_T(); ++t) {
        const Eigen::MatrixXd x = masked_block(system, t);
        const Eigen::MatrixXd sx = precision * x;
        a.noalias() += x.transpose() * sx;
        b.noalias() += sx.transpose() * masked_target(system, t);
    }
    return solve_normal(a, b);
}

Eigen::VectorXd fit_fgls(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                         const Eigen::MatrixXd& sigma_u, const MaskMatrix& observed) {
    return fit_fgls(restricted_system(y, z, r, observed), sigma_u);
}

Eigen::MatrixXd asymptotic_covariance(const LinearSystem& system, const Eigen::MatrixXd& sigma_u) {
    check_system(system);
    const Eigen::MatrixXd precision = precision_of(regularize_covariance(sigma_u).sigma);
    const int m = system.num_params();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int t = 0; t < system.effective_T(); ++t) {
        const Eigen::MatrixXd x = masked_block(system, t);
        a.noalias() += x.transpose() * precision * x;
    }
    return inverse_spd(a);
}

Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                                      const Eigen::MatrixXd& sigma_u, int effective_T) {
    const auto n = sigma_u.rows();
    const auto k = z.rows();
    if (r.rows() != n * k) throw DimensionError("R rows must equal N * rows(Z)");
    if (effective_T < 1) throw DimensionError("effective sample length must be positive");
    const double t = static_cast<double>(effective_T);
    const Eigen::MatrixXd gram = z * z.transpose() / t;
    const Eigen::MatrixXd precision = precision_of(regularize_covariance(sigma_u).sigma);
    const auto m = r.cols();
    // r_a' (G kron S) r_b = trace(R_a' S R_b G) with vec(R_a) = r_a.
    std::vector<Eigen::MatrixXd> weighted;
    weighted.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index b = 0; b < m; ++b) {
        const Eigen::MatrixXd rb = r.col(b).reshaped(n, k);
        weighted.push_back(precision * rb * gram);
    }
    Eigen::MatrixXd inner(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::MatrixXd ra = r.col(a).reshaped(n, k);
        for (Eigen::Index b = 0; b < m; ++b) inner(a, b) = (ra.array() * weighted[static_cast<std::size_t>(b)].array()).sum();
    }
    return inverse_spd(inner) / t;
}

double covariance_log_determinant(const Eigen::MatrixXd& sigma) {
    return std::max(log_det_of(regularize_covariance(sigma).sigma), std::log(1e-300));
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

RobustErrors hc2_standard_errors(const LinearSystem& system, const Eigen::VectorXd& gamma,
                                 const Eigen::MatrixXd& sigma_u) {
    check_system(system);
    const Eigen::MatrixXd sigma = regularize_covariance(sigma_u).sigma;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularityError("whitening covariance is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    const int m = system.num_params();

    std::vector<Eigen::MatrixXd> xw;
    std::vector<Eigen::VectorXd> ew;
    xw.reserve(system.design.size());
    ew.reserve(system.design.size());
    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(m, m);
    for (int t = 0; t < system.effective_T(); ++t) {
        const Eigen::MatrixXd x = masked_block(system, t);
        Eigen::VectorXd e = masked_target(system, t) - x * gamma;
        xw.push_back(lower.triangularView<Eigen::Lower>().solve(x));
        ew.push_back(lower.triangularView<Eigen::Lower>().solve(e));
        bread.noalias() += xw.back().transpose() * xw.back();
    }
    const Eigen::MatrixXd bread_inv = inverse_spd(bread);

    RobustErrors out;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t t = 0; t < xw.size(); ++t) {
        for (Eigen::Index i = 0; i < xw[t].rows(); ++i) {
            const Eigen::RowVectorXd row = xw[t].row(i);
            if (row.squaredNorm() == 0.0) continue;
            const double h = row * bread_inv * row.transpose();
            if (h >= kLeverageCeiling) {
                ++out.excluded_rows;
                continue;
            }
            meat.noalias() += row.transpose() * row * (ew[t](i) * ew[t](i) / (1.0 - h));
        }
    }
    const Eigen::MatrixXd cov = bread_inv * meat * bread_inv;
    out.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.p_values.resize(m);
    for (int c = 0; c < m; ++c) {
        out.p_values(c) = out.se(c) > 0.0 ? normal_two_sided_p(gamma(c) / out.se(c)) : (gamma(c) == 0.0 ? 1.0 : 0.0);
    }
    return out;
}

FitResult fit_gnarx(const RegressionData& data, const ParameterLayout& layout,
                    const std::vector<std::string>& node_names, const FitOptions& options) {
    const LinearSystem system = make_system(data);
    if (system.num_params() != layout.size()) throw DimensionError("design width does not match the parameter layout");

    FitResult fit;
    fit.first_target = data.first_target;
    fit.effective_T = data.effective_T();
    fit.residual_observed = data.target_observed;
    fit.parameter_names = layout.names(node_names);

    const OlsFit ols = fit_ols(system);
    fit.sigma_u = estimate_sigma_u(ols.residuals, fit.effective_T);
    const RegularizedCovariance reg = regularize_covariance(fit.sigma_u);
    if (reg.ridged) fit.warnings.emplace_back("innovation covariance is ill-conditioned; ridge applied");

    Eigen::VectorXd gamma = ols.gamma;
    if (options.method == EstimationMethod::fgls) gamma = fit_fgls(system, reg.sigma);
    fit.gamma_hat = ParameterVector(layout, gamma);
    fit.residuals = residuals_of(system, gamma);

    fit.loglik_proxy = -0.5 * fit.effective_T * covariance_log_determinant(fit.sigma_u);

    if (options.standard_errors) {
        if (options.method == EstimationMethod::fgls) {
            fit.se_asymptotic = asymptotic_covariance(system, reg.sigma).diagonal().cwiseMax(0.0).cwiseSqrt();
            const RobustErrors robust = hc2_standard_errors(system, gamma, reg.sigma);
            fit.se_hc2 = robust.se;
            fit.p_values = robust.p_values;
            if (robust.excluded_rows > 0) {
                fit.warnings.push_back(std::to_string(robust.excluded_rows) +
                                       " rows with unit leverage excluded from HC2");
            }
        } else {
            // OLS sandwich under cross-sectional correlation.
            const int m = layout.size();
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
            Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(m, m);
            for (int t = 0; t < system.effective_T(); ++t) {
                const Eigen::MatrixXd x = masked_block(system, t);
                a.noalias() += x.transpose() * x;
                middle.noalias() += x.transpose() * fit.sigma_u * x;
            }
            const Eigen::MatrixXd a_inv = inverse_spd(a);
            fit.se_asymptotic = (a_inv * middle * a_inv).diagonal().cwiseMax(0.0).cwiseSqrt();
            const RobustErrors robust = hc2_standard_errors(
                system, gamma, Eigen::MatrixXd::Identity(system.num_nodes(), system.num_nodes()));
            fit.se_hc2 = robust.se;
            fit.p_values = robust.p_values;
        }
    }
    return fit;
}

FitResult fit_gnarx(const ModelOrder& order, const Panel& panel, const std::vector<Panel>& exogenous,
                    const Network& net, const FitOptions& options) {
    const RegressionData data = build_regression_data(order, panel, exogenous, net, options.first_target);
    return fit_gnarx(data, ParameterLayout(order, panel.num_nodes()), panel.nodes(), options);
}

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json params = nlohmann::json::array();
    const auto& gamma = fit.gamma_hat.values;
    for (Eigen::Index c = 0; c < gamma.size(); ++c) {
        nlohmann::json p{{"name", fit.parameter_names[static_cast<std::size_t>(c)]}, {"estimate", gamma(c)}};
        if (fit.se_asymptotic.size() == gamma.size()) p["se_asymptotic"] = fit.se_asymptotic(c);
        if (fit.se_hc2.size() == gamma.size()) {
            p["se_hc2"] = fit.se_hc2(c);
            p["p_value"] = fit.p_values(c);
        }
        params.push_back(std::move(p));
    }
    nlohmann::json sigma = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fit.sigma_u.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < fit.sigma_u.cols(); ++j) row.push_back(fit.sigma_u(i, j));
        sigma.push_back(std::move(row));
    }
    return {{"order", fit.order()},
            {"effective_T", fit.effective_T},
            {"first_target", fit.first_target},
            {"loglik_proxy", fit.loglik_proxy},
            {"parameters", std::move(params)},
            {"sigma_u", std::move(sigma)},
            {"warnings", fit.warnings}};
}

}  // namespace gnarx
