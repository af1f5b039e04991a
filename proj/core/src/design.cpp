#include "gnarx/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gnarx/errors.hpp"

namespace gnarx {

std::string to_string(AlphaMode mode) { return mode == AlphaMode::global ? "global" : "local"; }

AlphaMode parse_alpha_mode(std::string_view text) {
    if (text == "global") return AlphaMode::global;
    if (text == "local") return AlphaMode::local;
    throw ConfigError("alpha mode must be 'global' or 'local', got '" + std::string(text) + "'");
}

int ModelOrder::max_lag() const noexcept {
    int lag = p;
    for (int q : p_prime) lag = std::max(lag, q);
    return lag;
}

int ModelOrder::max_stage() const noexcept {
    return s.empty() ? 0 : *std::max_element(s.begin(), s.end());
}

void ModelOrder::validate(int diameter) const {
    if (p < 1) throw ValidationError("autoregressive order p must be >= 1");
    if (static_cast<int>(s.size()) != p) throw ValidationError("stage vector length must equal p");
    for (int sk : s) {
        if (sk < 0) throw ValidationError("neighbour stages must be >= 0");
        if (diameter >= 0 && sk > diameter) {
            throw ValidationError("neighbour stage " + std::to_string(sk) + " exceeds network diameter " +
                                  std::to_string(diameter));
        }
    }
    for (int q : p_prime) {
        if (q < 0) throw ValidationError("exogenous lags must be >= 0");
    }
}

std::string ModelOrder::to_string() const {
    std::ostringstream os;
    os << '(' << p << ",[";
    for (std::size_t k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k];
    os << ']';
    for (int q : p_prime) os << ',' << q;
    os << ')';
    return os.str();
}

void to_json(nlohmann::json& j, const ModelOrder& order) {
    j = nlohmann::json{{"p", order.p}, {"s", order.s}, {"p_prime", order.p_prime}, {"alpha", to_string(order.alpha)}};
}

void from_json(const nlohmann::json& j, ModelOrder& order) {
    try {
        order.p = j.at("p").get<int>();
        order.s = j.at("s").get<std::vector<int>>();
        order.p_prime = j.contains("p_prime") ? j.at("p_prime").get<std::vector<int>>() : std::vector<int>{};
        order.alpha = j.contains("alpha") ? parse_alpha_mode(j.at("alpha").get<std::string>()) : AlphaMode::local;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid model order JSON: ") + e.what());
    }
    order.validate();
}

int count_parameters(const ModelOrder& order, int num_nodes) {
    int m = order.alpha == AlphaMode::local ? num_nodes * order.p : order.p;
    m += std::accumulate(order.s.begin(), order.s.end(), 0);
    for (int q : order.p_prime) m += q + 1;
    return m;
}

ParameterLayout::ParameterLayout(ModelOrder order, int num_nodes) : order_(std::move(order)), num_nodes_(num_nodes) {
    order_.validate();
    const bool local = order_.alpha == AlphaMode::local;
    for (int k = 1; k <= order_.p; ++k) {
        lag_offset_.push_back(static_cast<int>(slots_.size()));
        if (local) {
            for (int i = 0; i < num_nodes_; ++i) slots_.push_back({ParameterKind::alpha, i, k, 0, 0});
        } else {
            slots_.push_back({ParameterKind::alpha, -1, k, 0, 0});
        }
        for (int r = 1; r <= order_.s[static_cast<std::size_t>(k - 1)]; ++r) {
            slots_.push_back({ParameterKind::beta, -1, k, r, 0});
        }
    }
    for (int h = 0; h < order_.num_exogenous(); ++h) {
        lambda_offset_.push_back(static_cast<int>(slots_.size()));
        for (int j = 0; j <= order_.p_prime[static_cast<std::size_t>(h)]; ++j) {
            slots_.push_back({ParameterKind::lambda, -1, j, 0, h});
        }
    }
}

int ParameterLayout::alpha_index(int node, int lag) const {
    if (lag < 1 || lag > order_.p) throw DimensionError("alpha lag out of range");
    const int base = lag_offset_[static_cast<std::size_t>(lag - 1)];
    if (order_.alpha == AlphaMode::global) return base;
    if (node < 0 || node >= num_nodes_) throw DimensionError("alpha node out of range");
    return base + node;
}

int ParameterLayout::beta_index(int lag, int stage) const {
    if (lag < 1 || lag > order_.p) throw DimensionError("beta lag out of range");
    if (stage < 1 || stage > order_.s[static_cast<std::size_t>(lag - 1)]) {
        throw DimensionError("beta stage out of range");
    }
    const int alphas = order_.alpha == AlphaMode::local ? num_nodes_ : 1;
    return lag_offset_[static_cast<std::size_t>(lag - 1)] + alphas + stage - 1;
}

int ParameterLayout::lambda_index(int regressor, int lag) const {
    if (regressor < 0 || regressor >= order_.num_exogenous()) throw DimensionError("lambda regressor out of range");
    if (lag < 0 || lag > order_.p_prime[static_cast<std::size_t>(regressor)]) {
        throw DimensionError("lambda lag out of range");
    }
    return lambda_offset_[static_cast<std::size_t>(regressor)] + lag;
}

std::vector<std::string> ParameterLayout::names(const std::vector<std::string>& node_names) const {
    std::vector<std::string> out;
    out.reserve(slots_.size());
    for (const auto& s : slots_) {
        switch (s.kind) {
            case ParameterKind::alpha:
                if (s.node >= 0) {
                    const std::string node = static_cast<std::size_t>(s.node) < node_names.size()
                                                 ? node_names[static_cast<std::size_t>(s.node)]
                                                 : std::to_string(s.node + 1);
                    out.push_back("alpha[" + node + "," + std::to_string(s.lag) + "]");
                } else {
                    out.push_back("alpha[" + std::to_string(s.lag) + "]");
                }
                break;
            case ParameterKind::beta:
                out.push_back("beta[" + std::to_string(s.lag) + "," + std::to_string(s.stage) + "]");
                break;
            case ParameterKind::lambda:
                out.push_back("lambda[" + std::to_string(s.regressor + 1) + "," + std::to_string(s.lag) + "]");
                break;
        }
    }
    return out;
}

ParameterVector::ParameterVector(ParameterLayout l, Eigen::VectorXd v) : layout(std::move(l)), values(std::move(v)) {
    if (values.size() != layout.size()) throw DimensionError("parameter vector length does not match its layout");
}

ParameterVector ParameterVector::zeros(const ModelOrder& order, int num_nodes) {
    ParameterLayout layout(order, num_nodes);
    const int m = layout.size();
    return {std::move(layout), Eigen::VectorXd::Zero(m)};
}

Eigen::MatrixXd VarxCoefficients::stacked() const {
    if (phi.empty()) return {};
    const auto n = phi.front().rows();
    Eigen::Index blocks = static_cast<Eigen::Index>(phi.size());
    for (const auto& l : lambda) blocks += static_cast<Eigen::Index>(l.size());
    Eigen::MatrixXd b(n, n * blocks);
    Eigen::Index c = 0;
    for (const auto& m : phi) b.middleCols(n * c++, n) = m;
    for (const auto& l : lambda) {
        for (const auto& m : l) b.middleCols(n * c++, n) = m;
    }
    return b;
}

namespace {

void check_stage_capacity(const ModelOrder& order, const StageWeights& weights) {
    if (order.max_stage() > weights.max_stage()) {
        throw DimensionError("model order needs neighbour stage " + std::to_string(order.max_stage()) +
                             " but only " + std::to_string(weights.max_stage()) + " stages are available");
    }
}

StageWeights stage_weights_for(const ModelOrder& order, const Network& net) {
    if (order.max_stage() > net.neighbourhoods().max_stage()) {
        throw DimensionError("model order needs neighbour stage " + std::to_string(order.max_stage()) +
                             " but the network has " + std::to_string(net.neighbourhoods().max_stage()));
    }
    return {net, order.max_stage()};
}

int stage_matrix_size(const StageWeights& weights, const ParameterVector& params) {
    if (weights.max_stage() > 0) return static_cast<int>(weights.stage(1).rows());
    return params.layout.num_nodes();
}

}  // namespace

VarxCoefficients assemble_coefficients(const ModelOrder& order, const ParameterVector& params,
                                       const StageWeights& weights) {
    check_stage_capacity(order, weights);
    if (!(params.layout.order() == order)) throw DimensionError("parameters were laid out for a different order");
    const int n = params.layout.num_nodes();
    if (stage_matrix_size(weights, params) != n) throw DimensionError("network size does not match parameters");

    VarxCoefficients out;
    for (int k = 1; k <= order.p; ++k) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) phi(i, i) = params.alpha(i, k);
        for (int r = 1; r <= order.s[static_cast<std::size_t>(k - 1)]; ++r) phi += params.beta(k, r) * weights.stage(r);
        out.phi.push_back(std::move(phi));
    }
    for (int h = 0; h < order.num_exogenous(); ++h) {
        std::vector<Eigen::MatrixXd> lags;
        for (int j = 0; j <= order.p_prime[static_cast<std::size_t>(h)]; ++j) {
            lags.push_back(params.lambda(h, j) * Eigen::MatrixXd::Identity(n, n));
        }
        out.lambda.push_back(std::move(lags));
    }
    return out;
}

VarxCoefficients assemble_coefficients(const ModelOrder& order, const ParameterVector& params, const Network& net) {
    return assemble_coefficients(order, params, stage_weights_for(order, net));
}

namespace {

Eigen::MatrixXd model_matrix(const ModelOrder& order, const StageWeights& weights, int num_nodes) {
    check_stage_capacity(order, weights);
    const Eigen::Index n = num_nodes;
    ParameterLayout layout(order, num_nodes);
    const Eigen::Index n2 = n * n;
    Eigen::Index blocks = order.p;
    for (int q : order.p_prime) blocks += q + 1;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n2 * blocks, layout.size());

    const Eigen::VectorXd identity_vec = Eigen::MatrixXd::Identity(n, n).reshaped();
    for (int k = 1; k <= order.p; ++k) {
        const Eigen::Index top = (k - 1) * n2;
        if (order.alpha == AlphaMode::local) {
            for (Eigen::Index i = 0; i < n; ++i) {
                r(top + i + n * i, layout.alpha_index(static_cast<int>(i), k)) = 1.0;
            }
        } else {
            r.block(top, layout.alpha_index(0, k), n2, 1) = identity_vec;
        }
        for (int st = 1; st <= order.s[static_cast<std::size_t>(k - 1)]; ++st) {
            r.block(top, layout.beta_index(k, st), n2, 1) = weights.stage(st).reshaped();
        }
    }
    Eigen::Index block = order.p;
    for (int h = 0; h < order.num_exogenous(); ++h) {
        for (int j = 0; j <= order.p_prime[static_cast<std::size_t>(h)]; ++j, ++block) {
            r.block(block * n2, layout.lambda_index(h, j), n2, 1) = identity_vec;
        }
    }
    return r;
}

}  // namespace

Eigen::MatrixXd build_model_matrix(const ModelOrder& order, const StageWeights& weights) {
    if (weights.max_stage() == 0) {
        throw DimensionError("stage weights carry no network size; use the Network overload");
    }
    return model_matrix(order, weights, static_cast<int>(weights.stage(1).rows()));
}

Eigen::MatrixXd build_model_matrix(const ModelOrder& order, const Network& net) {
    return model_matrix(order, stage_weights_for(order, net), net.num_nodes());
}

StationarityReport check_stationarity(const ModelOrder& order, const ParameterVector& params) {
    const int n = params.layout.num_nodes();
    StationarityReport report;
    report.margin = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int k = 1; k <= order.p; ++k) {
            total += std::abs(params.alpha(i, k));
            for (int r = 1; r <= order.s[static_cast<std::size_t>(k - 1)]; ++r) total += std::abs(params.beta(k, r));
        }
        report.margin(i) = 1.0 - total;
    }
    report.status = (report.margin.array() > 0.0).all() ? Stationarity::stationary_sufficient
                                                        : Stationarity::not_guaranteed;
    return report;
}

DesignBuilder::DesignBuilder(ModelOrder order, const Network& net)
    : layout_(std::move(order), net.num_nodes()), weights_(stage_weights_for(layout_.order(), net)) {}

const StageWeights& DesignBuilder::weights_for(const MaskMatrix& y_observed, int column) const {
    const auto n = y_observed.rows();
    bool all = true;
    std::vector<bool> pattern(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        pattern[static_cast<std::size_t>(i)] = y_observed(i, column);
        all = all && pattern[static_cast<std::size_t>(i)];
    }
    if (all) return weights_;
    auto it = cache_.find(pattern);
    if (it == cache_.end()) it = cache_.emplace(pattern, weights_.renormalized(pattern)).first;
    return it->second;
}

Eigen::MatrixXd DesignBuilder::block(const Eigen::MatrixXd& y, const MaskMatrix& y_observed,
                                     const std::vector<Eigen::MatrixXd>& x, const std::vector<MaskMatrix>& x_observed,
                                     int t) const {
    const auto& order = layout_.order();
    const int n = layout_.num_nodes();
    if (t < order.max_lag()) throw DimensionError("insufficient history for the design block");
    if (static_cast<int>(x.size()) < order.num_exogenous()) throw DimensionError("missing exogenous regressors");

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, layout_.size());
    for (int k = 1; k <= order.p; ++k) {
        const int col = t - k;
        Eigen::VectorXd lagged(n);
        for (int i = 0; i < n; ++i) lagged(i) = y_observed(i, col) ? y(i, col) : 0.0;
        if (order.alpha == AlphaMode::local) {
            for (int i = 0; i < n; ++i) out(i, layout_.alpha_index(i, k)) = lagged(i);
        } else {
            out.col(layout_.alpha_index(0, k)) = lagged;
        }
        const int stages = order.s[static_cast<std::size_t>(k - 1)];
        if (stages > 0) {
            const StageWeights& w = weights_for(y_observed, col);
            for (int r = 1; r <= stages; ++r) out.col(layout_.beta_index(k, r)) = w.stage(r) * lagged;
        }
    }
    for (int h = 0; h < order.num_exogenous(); ++h) {
        const auto& xh = x[static_cast<std::size_t>(h)];
        const auto& mh = x_observed[static_cast<std::size_t>(h)];
        for (int j = 0; j <= order.p_prime[static_cast<std::size_t>(h)]; ++j) {
            const int col = t - j;
            const int c = layout_.lambda_index(h, j);
            for (int i = 0; i < n; ++i) out(i, c) = mh(i, col) ? xh(i, col) : 0.0;
        }
    }
    return out;
}

void check_aligned(const Panel& panel, const std::vector<Panel>& exogenous) {
    for (const auto& x : exogenous) {
        if (x.nodes() != panel.nodes()) throw DimensionError("exogenous panel nodes differ from the target panel");
        if (x.times() != panel.times()) throw DimensionError("exogenous panel calendar differs from the target panel");
    }
}

RegressionData build_regression_data(const ModelOrder& order, const Panel& panel, const std::vector<Panel>& exogenous,
                                     const Network& net, std::optional<int> first_target) {
    order.validate();
    if (static_cast<int>(exogenous.size()) != order.num_exogenous()) {
        throw DimensionError("model order expects " + std::to_string(order.num_exogenous()) +
                             " exogenous regressors, got " + std::to_string(exogenous.size()));
    }
    check_aligned(panel, exogenous);
    if (net.nodes() != panel.nodes()) throw DimensionError("network nodes differ from the panel nodes");

    const int n = panel.num_nodes();
    const int total = panel.num_times();
    const int p_star = order.max_lag();
    const int first = first_target.value_or(p_star);
    if (first < p_star) throw DimensionError("first target column precedes the maximum lag");
    if (total <= first) {
        throw DimensionError("insufficient data: T = " + std::to_string(total) + " but p* = " + std::to_string(first));
    }

    DesignBuilder builder(order, net);
    std::vector<Eigen::MatrixXd> x;
    std::vector<MaskMatrix> x_obs;
    for (const auto& e : exogenous) {
        x.push_back(e.values());
        x_obs.push_back(e.observed());
    }

    const int t_eff = total - first;
    Eigen::Index k_rows = static_cast<Eigen::Index>(n) * order.p;
    for (int q : order.p_prime) k_rows += static_cast<Eigen::Index>(n) * (q + 1);

    RegressionData data;
    data.first_target = first;
    data.y = panel.zero_filled().rightCols(t_eff);
    data.target_observed = panel.observed().rightCols(t_eff);
    data.z = Eigen::MatrixXd::Zero(k_rows, t_eff);
    data.regressor_observed = MaskMatrix::Constant(k_rows, t_eff, false);
    data.design.reserve(static_cast<std::size_t>(t_eff));

    const Eigen::MatrixXd y_filled = panel.zero_filled();
    for (int c = 0; c < t_eff; ++c) {
        const int t = first + c;
        Eigen::Index row = 0;
        for (int k = 1; k <= order.p; ++k, row += n) {
            data.z.block(row, c, n, 1) = y_filled.col(t - k);
            data.regressor_observed.block(row, c, n, 1) = panel.observed().col(t - k);
        }
        for (int h = 0; h < order.num_exogenous(); ++h) {
            const auto& e = exogenous[static_cast<std::size_t>(h)];
            for (int j = 0; j <= order.p_prime[static_cast<std::size_t>(h)]; ++j, row += n) {
                for (int i = 0; i < n; ++i) {
                    const bool obs = e.is_observed(i, t - j);
                    data.z(row + i, c) = obs ? e.value(i, t - j) : 0.0;
                    data.regressor_observed(row + i, c) = obs;
                }
            }
        }
        data.design.push_back(builder.block(panel.values(), panel.observed(), x, x_obs, t));
    }
    return data;
}

}  // namespace gnarx
