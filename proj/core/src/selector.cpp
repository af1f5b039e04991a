#include "gnarx/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "gnarx/errors.hpp"
#include "gnarx/forecaster.hpp"
#include "gnarx/parallel.hpp"

namespace gnarx {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::vector<Panel> slice_all(const std::vector<Panel>& panels, int first, int count) {
    std::vector<Panel> out;
    out.reserve(panels.size());
    for (const auto& p : panels) out.push_back(p.slice_times(first, count));
    return out;
}

ModelOrder full_order(const SearchSpace& space, int stage_bound, int num_exogenous) {
    ModelOrder order;
    order.p = space.p_max;
    order.s.assign(static_cast<std::size_t>(space.p_max), stage_bound);
    order.p_prime.assign(static_cast<std::size_t>(num_exogenous), space.p_prime_max);
    order.alpha = space.alpha;
    return order;
}

int stage_bound_of(const SearchSpace& space, const Network& net) {
    return std::min(space.s_max, net.neighbourhoods().max_stage());
}

const Candidate& best_of(const std::vector<Candidate>& candidates, bool by_msfe) {
    const auto score = [by_msfe](const Candidate& c) { return by_msfe ? c.msfe.value_or(kInfinity) : c.bic; };
    const Candidate* best = &candidates.front();
    for (const auto& c : candidates) {
        if (ranks_before(score(c), c, score(*best), *best)) best = &c;
    }
    if (!std::isfinite(score(*best))) throw NumericalError("every candidate order produced a singular fit");
    return *best;
}

std::vector<Candidate> evaluate_all(const BicEvaluator& evaluator, const std::vector<ModelOrder>& orders,
                                    int threads) {
    std::vector<Candidate> out(orders.size());
    parallel_for(static_cast<int>(orders.size()), threads,
                 [&](int i) { out[static_cast<std::size_t>(i)] = evaluator.evaluate(orders[static_cast<std::size_t>(i)]); });
    return out;
}

std::string quoted(const std::string& text) { return '"' + text + '"'; }

}  // namespace

double bic(double log_det_sigma, int num_params, int effective_T) {
    if (effective_T < 1) throw DimensionError("effective sample length must be positive");
    const double t = static_cast<double>(effective_T);
    return t * log_det_sigma + static_cast<double>(num_params) * std::log(t);
}

double bic(const FitResult& fit) {
    return bic(covariance_log_determinant(fit.sigma_u), static_cast<int>(fit.gamma_hat.values.size()),
               fit.effective_T);
}

void SearchSpace::validate() const {
    if (p_max < 1) throw ConfigError("search space needs p_max >= 1");
    if (s_max < 0) throw ConfigError("search space needs s_max >= 0");
    if (p_prime_max < 0) throw ConfigError("search space needs p_prime_max >= 0");
}

bool ranks_before(double score_a, const Candidate& a, double score_b, const Candidate& b) {
    if (score_a != score_b) return score_a < score_b;
    if (a.num_params != b.num_params) return a.num_params < b.num_params;
    return a.order < b.order;
}

BicEvaluator::BicEvaluator(const SearchSpace& space, const Panel& panel, const std::vector<Panel>& exogenous,
                           const Network& net)
    : stage_bound_(0), num_exogenous_(static_cast<int>(exogenous.size())) {
    space.validate();
    stage_bound_ = stage_bound_of(space, net);
    const ModelOrder order = full_order(space, stage_bound_, num_exogenous_);
    full_ = ParameterLayout(order, panel.num_nodes());
    data_ = build_regression_data(order, panel, exogenous, net);

    const int m = full_.size();
    gram_ = Eigen::MatrixXd::Zero(m, m);
    moment_ = Eigen::VectorXd::Zero(m);
    masked_design_.reserve(data_.design.size());
    for (int t = 0; t < data_.effective_T(); ++t) {
        Eigen::MatrixXd x = data_.design[static_cast<std::size_t>(t)];
        for (int i = 0; i < data_.num_nodes(); ++i) {
            if (!data_.target_observed(i, t)) x.row(i).setZero();
        }
        gram_.noalias() += x.transpose() * x;
        moment_.noalias() += x.transpose() * data_.y.col(t);
        masked_design_.push_back(std::move(x));
    }
}

std::vector<int> BicEvaluator::columns_of(const ModelOrder& order) const {
    const auto& full = full_.order();
    order.validate();
    if (order.alpha != full.alpha || order.p > full.p) throw ValidationError("order lies outside the search space");
    for (int sk : order.s) {
        if (sk > stage_bound_) throw ValidationError("order lies outside the search space");
    }
    if (!order.p_prime.empty() && order.num_exogenous() != num_exogenous_) {
        throw ValidationError("order regressor count does not match the data");
    }
    for (int q : order.p_prime) {
        if (q > full.p_prime.front()) throw ValidationError("order lies outside the search space");
    }

    const ParameterLayout layout(order, full_.num_nodes());
    std::vector<int> columns;
    columns.reserve(static_cast<std::size_t>(layout.size()));
    for (int c = 0; c < layout.size(); ++c) {
        const auto& slot = layout.slot(c);
        switch (slot.kind) {
            case ParameterKind::alpha: columns.push_back(full_.alpha_index(slot.node, slot.lag)); break;
            case ParameterKind::beta: columns.push_back(full_.beta_index(slot.lag, slot.stage)); break;
            case ParameterKind::lambda: columns.push_back(full_.lambda_index(slot.regressor, slot.lag)); break;
        }
    }
    return columns;
}

Candidate BicEvaluator::evaluate(const ModelOrder& order) const {
    const std::vector<int> columns = columns_of(order);
    Candidate out;
    out.order = order;
    out.num_params = static_cast<int>(columns.size());

    const Eigen::MatrixXd a = gram_(columns, columns);
    const Eigen::VectorXd b = moment_(columns);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) {
        out.bic = kInfinity;
        return out;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    const Eigen::VectorXd gamma = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(b)) : Eigen::VectorXd(qr.solve(b));

    const int n = data_.num_nodes();
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < data_.effective_T(); ++t) {
        const Eigen::VectorXd e =
            data_.y.col(t) - masked_design_[static_cast<std::size_t>(t)](Eigen::all, columns) * gamma;
        scatter.noalias() += e * e.transpose();
    }
    const int t_eff = data_.effective_T();
    out.bic = bic(covariance_log_determinant(scatter / static_cast<double>(t_eff)), out.num_params, t_eff);
    return out;
}

std::vector<ModelOrder> enumerate_orders(const SearchSpace& space, int stage_bound, int num_exogenous,
                                         std::size_t max_candidates) {
    space.validate();
    double total = 0.0;
    const double per_lag = stage_bound + 1.0;
    const double exog = std::pow(space.p_prime_max + 1.0, num_exogenous);
    for (int p = 1; p <= space.p_max; ++p) total += std::pow(per_lag, p) * exog;
    if (total > static_cast<double>(max_candidates)) {
        throw ConfigError("search space holds " + format_double(total) + " candidates, more than the limit of " +
                          std::to_string(max_candidates) + "; use the stagewise search");
    }

    // Odometer increment with the last digit fastest; false once it wraps.
    const auto advance = [](std::vector<int>& digits, int bound) {
        for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
            if (*it < bound) {
                ++*it;
                return true;
            }
            *it = 0;
        }
        return false;
    };

    std::vector<ModelOrder> out;
    out.reserve(static_cast<std::size_t>(total));
    for (int p = 1; p <= space.p_max; ++p) {
        std::vector<int> s(static_cast<std::size_t>(p), 0);
        do {
            std::vector<int> q(static_cast<std::size_t>(num_exogenous), 0);
            do {
                out.push_back(ModelOrder{p, s, q, space.alpha});
            } while (advance(q, space.p_prime_max));
        } while (advance(s, stage_bound));
    }
    return out;
}

SelectionTrace select_stagewise(const SearchSpace& space, const Panel& panel, const std::vector<Panel>& exogenous,
                                const Network& net, const SearchOptions& options) {
    const BicEvaluator evaluator(space, panel, exogenous, net);
    SelectionTrace trace;
    trace.first_target = evaluator.first_target();

    std::vector<ModelOrder> stage1;
    const bool saturated = options.stage_one == StageOneTerms::saturated;
    for (int p = 1; p <= space.p_max; ++p) {
        stage1.push_back(ModelOrder{p, std::vector<int>(static_cast<std::size_t>(p), saturated ? evaluator.stage_bound() : 0),
                                    saturated ? std::vector<int>(static_cast<std::size_t>(evaluator.num_exogenous()),
                                                                 space.p_prime_max)
                                              : std::vector<int>{},
                                    space.alpha});
    }
    std::vector<Candidate> first = evaluate_all(evaluator, stage1, options.threads);
    for (auto& c : first) c.stage = 1;
    const int p = best_of(first, false).order.p;
    trace.visited = first;

    std::map<ModelOrder, Candidate> seen;
    std::vector<Candidate> second;
    const auto visit = [&](const std::vector<ModelOrder>& orders) {
        std::vector<ModelOrder> fresh;
        for (const auto& o : orders) {
            if (!seen.contains(o)) fresh.push_back(o);
        }
        std::vector<Candidate> scored = evaluate_all(evaluator, fresh, options.threads);
        for (auto& c : scored) {
            c.stage = 2;
            seen.emplace(c.order, c);
            second.push_back(c);
        }
    };

    const int h = evaluator.num_exogenous();
    ModelOrder current{p, std::vector<int>(static_cast<std::size_t>(p), 0), std::vector<int>(static_cast<std::size_t>(h), 0),
                       space.alpha};
    visit({current});
    const int components = p + h;
    for (bool changed = true; changed;) {
        changed = false;
        for (int c = 0; c < components; ++c) {
            const int bound = c < p ? evaluator.stage_bound() : space.p_prime_max;
            std::vector<ModelOrder> options_c;
            for (int v = 0; v <= bound; ++v) {
                ModelOrder o = current;
                (c < p ? o.s[static_cast<std::size_t>(c)] : o.p_prime[static_cast<std::size_t>(c - p)]) = v;
                options_c.push_back(std::move(o));
            }
            visit(options_c);
            const Candidate* best = &seen.at(current);
            for (const auto& o : options_c) {
                const Candidate& cand = seen.at(o);
                if (ranks_before(cand.bic, cand, best->bic, *best)) best = &cand;
            }
            if (best->order != current) {
                current = best->order;
                changed = true;
            }
        }
    }
    trace.winner = best_of(second, false).order;
    trace.visited.insert(trace.visited.end(), second.begin(), second.end());
    return trace;
}

SelectionTrace select_global(const SearchSpace& space, const Panel& panel, const std::vector<Panel>& exogenous,
                             const Network& net, const SearchOptions& options) {
    const BicEvaluator evaluator(space, panel, exogenous, net);
    const auto orders =
        enumerate_orders(space, evaluator.stage_bound(), evaluator.num_exogenous(), options.max_candidates);
    SelectionTrace trace;
    trace.first_target = evaluator.first_target();
    trace.visited = evaluate_all(evaluator, orders, options.threads);
    trace.winner = best_of(trace.visited, false).order;
    return trace;
}

SelectionTrace select_by_msfe(const SearchSpace& space, const Panel& panel, const std::vector<Panel>& exogenous,
                              const Network& net, int fit_months, int eval_months, const SearchOptions& options) {
    if (fit_months < 1 || eval_months < 1 || fit_months + eval_months > panel.num_times()) {
        throw ValidationError("MSFE selection needs " + std::to_string(fit_months + eval_months) +
                              " months of in-sample data, got " + std::to_string(panel.num_times()));
    }
    const int h = static_cast<int>(exogenous.size());
    const int stage_bound = stage_bound_of(space, net);
    const auto orders = enumerate_orders(space, stage_bound, h, options.max_candidates);
    const int first_target = full_order(space, stage_bound, h).max_lag();

    const Panel window = panel.slice_times(0, fit_months + eval_months);
    const std::vector<Panel> window_x = slice_all(exogenous, 0, fit_months + eval_months);
    const Panel train = panel.slice_times(0, fit_months);
    const std::vector<Panel> train_x = slice_all(exogenous, 0, fit_months);

    SelectionTrace trace;
    trace.first_target = first_target;
    trace.visited.resize(orders.size());
    parallel_for(static_cast<int>(orders.size()), options.threads, [&](int i) {
        Candidate& c = trace.visited[static_cast<std::size_t>(i)];
        c.order = orders[static_cast<std::size_t>(i)];
        c.num_params = count_parameters(c.order, panel.num_nodes());
        try {
            const FitResult fit = fit_gnarx(c.order, train, train_x, net,
                                            FitOptions{EstimationMethod::fgls, first_target, false});
            c.bic = bic(fit);
            c.msfe = evaluate_fixed(fit.gamma_hat, net, window, window_x, fit_months, fit_months + eval_months).msfe;
        } catch (const SingularityError&) {
            c.bic = kInfinity;
        }
    });
    trace.winner = best_of(trace.visited, true).order;
    return trace;
}

void write_trace_csv(std::ostream& out, const SelectionTrace& trace) {
    out << "order,bic,msfe\n";
    for (const auto& c : trace.visited) {
        out << quoted(c.order.to_string()) << ',' << format_double(c.bic) << ','
            << (c.msfe ? format_double(*c.msfe) : std::string()) << '\n';
    }
}

void save_trace_csv(const std::filesystem::path& path, const SelectionTrace& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_trace_csv(out, trace);
}

}  // namespace gnarx
