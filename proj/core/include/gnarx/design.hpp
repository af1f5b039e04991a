#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gnarx/network.hpp"
#include "gnarx/panel.hpp"

namespace gnarx {

enum class AlphaMode { global, local };

[[nodiscard]] std::string to_string(AlphaMode mode);
[[nodiscard]] AlphaMode parse_alpha_mode(std::string_view text);

/// GNARX(p, s, p') specification: autoregressive order p, neighbour stage
/// s_k for each lag k = 1..p, and maximum lag p'_h of each exogenous regressor.
struct ModelOrder {
    int p = 1;
    std::vector<int> s{0};
    std::vector<int> p_prime;
    AlphaMode alpha = AlphaMode::local;

    [[nodiscard]] int num_exogenous() const noexcept { return static_cast<int>(p_prime.size()); }
    /// p* = max(p, p'_1, ..., p'_H).
    [[nodiscard]] int max_lag() const noexcept;
    [[nodiscard]] int max_stage() const noexcept;
    /// Throws ValidationError on inconsistent fields. `diameter` < 0 skips the stage bound.
    void validate(int diameter = -1) const;

    /// Compact notation, e.g. "(5,[1,0,1,0,1],3,2)".
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const ModelOrder&, const ModelOrder&) = default;
    friend auto operator<=>(const ModelOrder& a, const ModelOrder& b) {
        if (auto c = a.p <=> b.p; c != 0) return c;
        if (auto c = a.s <=> b.s; c != 0) return c;
        if (auto c = a.p_prime <=> b.p_prime; c != 0) return c;
        return a.alpha <=> b.alpha;
    }
};

void to_json(nlohmann::json& j, const ModelOrder& order);
void from_json(const nlohmann::json& j, ModelOrder& order);

/// M = N p (local) or p (global), plus sum_k s_k, plus sum_h (p'_h + 1).
[[nodiscard]] int count_parameters(const ModelOrder& order, int num_nodes);

enum class ParameterKind { alpha, beta, lambda };

/// Position of each GNARX parameter inside gamma. The ordering stacks, for each
/// lag k, the alphas then the betas of that lag, followed by every lambda
/// (regressor-major, lag-minor).
class ParameterLayout {
public:
    struct Slot {
        ParameterKind kind;
        int node = -1;  // alpha under local mode only
        int lag = 0;    // alpha/beta: 1..p; lambda: 0..p'_h
        int stage = 0;  // beta only
        int regressor = 0;  // lambda only (0-based)
    };

    ParameterLayout() = default;
    ParameterLayout(ModelOrder order, int num_nodes);

    [[nodiscard]] const ModelOrder& order() const noexcept { return order_; }
    [[nodiscard]] int num_nodes() const noexcept { return num_nodes_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(slots_.size()); }
    [[nodiscard]] const Slot& slot(int index) const { return slots_.at(static_cast<std::size_t>(index)); }

    [[nodiscard]] int alpha_index(int node, int lag) const;
    [[nodiscard]] int beta_index(int lag, int stage) const;
    [[nodiscard]] int lambda_index(int regressor, int lag) const;

    /// "alpha[UK,1]", "alpha[1]", "beta[1,1]", "lambda[1,0]" (regressors 1-based).
    [[nodiscard]] std::vector<std::string> names(const std::vector<std::string>& node_names) const;

private:
    ModelOrder order_;
    int num_nodes_ = 0;
    std::vector<Slot> slots_;
    std::vector<int> lag_offset_;
    std::vector<int> lambda_offset_;
};

struct ParameterVector {
    ParameterLayout layout;
    Eigen::VectorXd values;

    ParameterVector() = default;
    ParameterVector(ParameterLayout l, Eigen::VectorXd v);
    static ParameterVector zeros(const ModelOrder& order, int num_nodes);

    [[nodiscard]] double alpha(int node, int lag) const { return values(layout.alpha_index(node, lag)); }
    [[nodiscard]] double beta(int lag, int stage) const { return values(layout.beta_index(lag, stage)); }
    [[nodiscard]] double lambda(int regressor, int lag) const { return values(layout.lambda_index(regressor, lag)); }
    double& alpha(int node, int lag) { return values(layout.alpha_index(node, lag)); }
    double& beta(int lag, int stage) { return values(layout.beta_index(lag, stage)); }
    double& lambda(int regressor, int lag) { return values(layout.lambda_index(regressor, lag)); }
};

/// Restricted VARX coefficients: phi_k (k = 1..p) and Lambda_{h,j} = lambda I.
struct VarxCoefficients {
    std::vector<Eigen::MatrixXd> phi;
    std::vector<std::vector<Eigen::MatrixXd>> lambda;

    /// B = [phi_1, ..., phi_p, Lambda_{1,0}, ..., Lambda_{H,p'_H}].
    [[nodiscard]] Eigen::MatrixXd stacked() const;
};

[[nodiscard]] VarxCoefficients assemble_coefficients(const ModelOrder& order, const ParameterVector& params,
                                                     const StageWeights& weights);
[[nodiscard]] VarxCoefficients assemble_coefficients(const ModelOrder& order, const ParameterVector& params,
                                                     const Network& net);

/// Model matrix R (P x M) with vec(B) = R gamma, vec stacking columns.
[[nodiscard]] Eigen::MatrixXd build_model_matrix(const ModelOrder& order, const StageWeights& weights);
[[nodiscard]] Eigen::MatrixXd build_model_matrix(const ModelOrder& order, const Network& net);

enum class Stationarity { stationary_sufficient, not_guaranteed };

struct StationarityReport {
    Stationarity status = Stationarity::stationary_sufficient;
    Eigen::VectorXd margin;  // per node: 1 - sum_k (|alpha_{i,k}| + sum_r |beta_{k,r}|)
};

[[nodiscard]] StationarityReport check_stationarity(const ModelOrder& order, const ParameterVector& params);

/// Builds the per-time design blocks X_t (N x M) from a history of target and
/// exogenous values. Lag-k network regressors use stage weights renormalised
/// over the nodes observed at t - k; unobserved lagged values contribute zero.
class DesignBuilder {
public:
    DesignBuilder(ModelOrder order, const Network& net);

    [[nodiscard]] const ModelOrder& order() const noexcept { return layout_.order(); }
    [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] const StageWeights& stage_weights() const noexcept { return weights_; }

    /// Regressors for the target at column t. Requires t >= p*.
    [[nodiscard]] Eigen::MatrixXd block(const Eigen::MatrixXd& y, const MaskMatrix& y_observed,
                                        const std::vector<Eigen::MatrixXd>& x,
                                        const std::vector<MaskMatrix>& x_observed, int t) const;

private:
    const StageWeights& weights_for(const MaskMatrix& y_observed, int column) const;

    ParameterLayout layout_;
    StageWeights weights_;
    mutable std::map<std::vector<bool>, StageWeights> cache_;
};

/// Y = B Z + U in matrix form plus the per-time restricted design blocks.
struct RegressionData {
    int first_target = 0;             // panel column of the first target
    Eigen::MatrixXd y;                // N x T'
    Eigen::MatrixXd z;                // K x T', unobserved entries zero
    MaskMatrix target_observed;       // N x T'
    MaskMatrix regressor_observed;    // K x T'
    std::vector<Eigen::MatrixXd> design;  // T' blocks of N x M

    [[nodiscard]] int effective_T() const noexcept { return static_cast<int>(y.cols()); }
    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(y.rows()); }
};

/// Exogenous panels must share the target panel's nodes and calendar.
void check_aligned(const Panel& panel, const std::vector<Panel>& exogenous);

/// Targets run from column `first_target` (default p*) to the end of the panel.
[[nodiscard]] RegressionData build_regression_data(const ModelOrder& order, const Panel& panel,
                                                   const std::vector<Panel>& exogenous, const Network& net,
                                                   std::optional<int> first_target = std::nullopt);

}  // namespace gnarx
