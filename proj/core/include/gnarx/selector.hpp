#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gnarx/estimator.hpp"

namespace gnarx {

/// BIC = T' log det Sigma_u + M log T'.
[[nodiscard]] double bic(double log_det_sigma, int num_params, int effective_T);
[[nodiscard]] double bic(const FitResult& fit);

struct SearchSpace {
    int p_max = 12;
    int s_max = 1;        // per lag; clipped to the network's largest stage
    int p_prime_max = 3;  // per regressor
    AlphaMode alpha = AlphaMode::local;

    void validate() const;
};

struct Candidate {
    ModelOrder order;
    int num_params = 0;
    double bic = 0.0;            // +inf when the fit is singular
    std::optional<double> msfe;  // MSFE-based search only
    int stage = 0;               // stagewise search: 1 or 2
};

struct SelectionTrace {
    std::vector<Candidate> visited;  // canonical visiting order
    ModelOrder winner;
    int first_target = 0;            // common estimation sample of every candidate
};

/// True when `a` ranks strictly ahead of `b`: lower score, then fewer
/// parameters, then lexicographically smaller order.
[[nodiscard]] bool ranks_before(double score_a, const Candidate& a, double score_b, const Candidate& b);

/// BIC of arbitrary sub-orders of a search space. Every candidate is fitted on
/// the same targets (columns max(p_max, p_prime_max) onward) by reusing the
/// design of the largest order in the space.
class BicEvaluator {
public:
    BicEvaluator(const SearchSpace& space, const Panel& panel, const std::vector<Panel>& exogenous,
                 const Network& net);

    /// Orders with an empty p_prime leave every regressor out.
    [[nodiscard]] Candidate evaluate(const ModelOrder& order) const;

    [[nodiscard]] int first_target() const noexcept { return data_.first_target; }
    [[nodiscard]] int effective_T() const noexcept { return data_.effective_T(); }
    [[nodiscard]] int stage_bound() const noexcept { return stage_bound_; }
    [[nodiscard]] int num_exogenous() const noexcept { return num_exogenous_; }

private:
    [[nodiscard]] std::vector<int> columns_of(const ModelOrder& order) const;

    ParameterLayout full_;
    RegressionData data_;
    std::vector<Eigen::MatrixXd> masked_design_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd moment_;
    int stage_bound_ = 0;
    int num_exogenous_ = 0;
};

/// Network and regressor orders held during the stagewise choice of p.
enum class StageOneTerms { none, saturated };

struct SearchOptions {
    int threads = 1;
    StageOneTerms stage_one = StageOneTerms::saturated;
    std::size_t max_candidates = 1'000'000;
};

/// Stage 1 picks p with no network terms and no regressors (or, when
/// saturated, with every s_j and p'_h at its maximum); stage 2 runs
/// coordinate descent over s_1..s_p and p'_1..p'_H at that p. The winner is
/// the best stage-2 candidate.
[[nodiscard]] SelectionTrace select_stagewise(const SearchSpace& space, const Panel& panel,
                                              const std::vector<Panel>& exogenous, const Network& net,
                                              const SearchOptions& options = {});

/// Exhaustive search over p, s and p' within the space.
[[nodiscard]] SelectionTrace select_global(const SearchSpace& space, const Panel& panel,
                                           const std::vector<Panel>& exogenous, const Network& net,
                                           const SearchOptions& options = {});

/// Every order in the space fitted on the first `fit_months` columns and scored
/// by one-step MSFE over the following `eval_months`.
[[nodiscard]] SelectionTrace select_by_msfe(const SearchSpace& space, const Panel& panel,
                                            const std::vector<Panel>& exogenous, const Network& net,
                                            int fit_months = 180, int eval_months = 60,
                                            const SearchOptions& options = {});

/// Every order of the space in canonical (p, s, p') order.
[[nodiscard]] std::vector<ModelOrder> enumerate_orders(const SearchSpace& space, int stage_bound, int num_exogenous,
                                                       std::size_t max_candidates);

void write_trace_csv(std::ostream& out, const SelectionTrace& trace);
void save_trace_csv(const std::filesystem::path& path, const SelectionTrace& trace);

}  // namespace gnarx
