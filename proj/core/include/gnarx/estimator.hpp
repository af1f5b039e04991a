#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gnarx/design.hpp"

namespace gnarx {

/// Stacked restricted regression vec(Y_t) = X_t gamma + u_t, one N x M design
/// block per target column. Unobserved targets carry no information: their
/// rows are dropped from the normal equations and their residuals are zero.
struct LinearSystem {
    std::vector<Eigen::MatrixXd> design;
    Eigen::MatrixXd targets;  // N x T'
    MaskMatrix observed;      // N x T'

    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(targets.rows()); }
    [[nodiscard]] int effective_T() const noexcept { return static_cast<int>(targets.cols()); }
    [[nodiscard]] int num_params() const noexcept {
        return design.empty() ? 0 : static_cast<int>(design.front().cols());
    }
};

[[nodiscard]] LinearSystem make_system(const RegressionData& data);
/// Blocks X_t = (Z_t' kron I_N) R for an arbitrary restriction matrix R.
[[nodiscard]] LinearSystem restricted_system(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                             const Eigen::MatrixXd& r, const MaskMatrix& observed);

struct OlsFit {
    Eigen::VectorXd gamma;
    Eigen::MatrixXd residuals;  // N x T', zero where the target is unobserved
};

[[nodiscard]] OlsFit fit_ols(const LinearSystem& system);
[[nodiscard]] OlsFit fit_ols(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                             const MaskMatrix& observed);

[[nodiscard]] Eigen::MatrixXd residuals_of(const LinearSystem& system, const Eigen::VectorXd& gamma);

/// Sigma_u = (1 / T') sum_t u_t u_t'.
[[nodiscard]] Eigen::MatrixXd estimate_sigma_u(const Eigen::MatrixXd& residuals, int effective_T);

/// Sigma with a ridge of 1e-8 trace / N added when its condition number exceeds
/// 1e12. An all-zero Sigma is replaced by the identity.
struct RegularizedCovariance {
    Eigen::MatrixXd sigma;
    bool ridged = false;
};
[[nodiscard]] RegularizedCovariance regularize_covariance(const Eigen::MatrixXd& sigma);

/// log det of the regularised Sigma, floored at log(1e-300).
[[nodiscard]] double covariance_log_determinant(const Eigen::MatrixXd& sigma);

[[nodiscard]] Eigen::VectorXd fit_fgls(const LinearSystem& system, const Eigen::MatrixXd& sigma_u);
[[nodiscard]] Eigen::VectorXd fit_fgls(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                                       const Eigen::MatrixXd& sigma_u, const MaskMatrix& observed);

/// [sum_t X_t' Sigma^-1 X_t]^-1, i.e. T'^-1 [R' {(T'^-1 Z Z') kron Sigma^-1} R]^-1.
[[nodiscard]] Eigen::MatrixXd asymptotic_covariance(const LinearSystem& system, const Eigen::MatrixXd& sigma_u);
/// Same quantity evaluated directly from Z and R.
[[nodiscard]] Eigen::MatrixXd asymptotic_covariance(const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                                                    const Eigen::MatrixXd& sigma_u, int effective_T);

struct RobustErrors {
    Eigen::VectorXd se;
    Eigen::VectorXd p_values;
    int excluded_rows = 0;  // rows with leverage numerically equal to one
};

/// HC2 sandwich on the Sigma-whitened stacked regression: residuals scaled by
/// (1 - h_k)^(-1/2), two-sided normal p-values. Pass the identity for OLS.
[[nodiscard]] RobustErrors hc2_standard_errors(const LinearSystem& system, const Eigen::VectorXd& gamma,
                                               const Eigen::MatrixXd& sigma_u);

/// Two-sided standard normal tail probability of |z|.
[[nodiscard]] double normal_two_sided_p(double z);

enum class EstimationMethod { ols, fgls };

struct FitOptions {
    EstimationMethod method = EstimationMethod::fgls;
    /// Panel column of the first target; defaults to p*. Used to give every
    /// candidate in a search the same estimation sample.
    std::optional<int> first_target;
    bool standard_errors = true;
};

struct FitResult {
    ParameterVector gamma_hat;
    std::vector<std::string> parameter_names;
    Eigen::MatrixXd sigma_u;       // from the first-stage OLS residuals
    Eigen::MatrixXd residuals;     // N x T' residuals of the final estimate
    MaskMatrix residual_observed;  // N x T'
    int first_target = 0;
    int effective_T = 0;
    Eigen::VectorXd se_asymptotic;
    Eigen::VectorXd se_hc2;
    Eigen::VectorXd p_values;
    double loglik_proxy = 0.0;     // -(T'/2) log det Sigma_u
    std::vector<std::string> warnings;

    [[nodiscard]] const ModelOrder& order() const noexcept { return gamma_hat.layout.order(); }
};

/// OLS, then Sigma_u, then a single FGLS step (unless method == ols).
[[nodiscard]] FitResult fit_gnarx(const ModelOrder& order, const Panel& panel, const std::vector<Panel>& exogenous,
                                  const Network& net, const FitOptions& options = {});
[[nodiscard]] FitResult fit_gnarx(const RegressionData& data, const ParameterLayout& layout,
                                  const std::vector<std::string>& node_names, const FitOptions& options = {});

[[nodiscard]] nlohmann::json fit_to_json(const FitResult& fit);

}  // namespace gnarx
