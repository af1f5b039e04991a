#include "oracles.hpp"

#include <cmath>
#include <numeric>

namespace gnarx::oracle {

std::vector<std::vector<std::vector<int>>> stages_by_matrix_powers(const MaskMatrix& adjacency) {
    const auto n = static_cast<int>(adjacency.rows());
    Eigen::MatrixXi a = adjacency.cast<int>();
    std::vector<std::vector<std::vector<int>>> out(static_cast<std::size_t>(n));
    Eigen::MatrixXi seen = Eigen::MatrixXi::Identity(n, n);
    Eigen::MatrixXi walk = Eigen::MatrixXi::Identity(n, n);
    for (int r = 1; r <= n; ++r) {
        walk = ((walk * a).array() > 0).cast<int>();
        for (int i = 0; i < n; ++i) {
            std::vector<int> stage;
            for (int j = 0; j < n; ++j) {
                if (walk(i, j) && !seen(i, j)) stage.push_back(j);
            }
            if (!stage.empty()) {
                out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(r));
                out[static_cast<std::size_t>(i)][static_cast<std::size_t>(r - 1)] = stage;
            }
        }
        seen = ((seen + walk).array() > 0).cast<int>();
    }
    return out;
}

MaskMatrix random_digraph(int n, double density, std::mt19937_64& rng) {
    std::bernoulli_distribution edge(density);
    MaskMatrix a = MaskMatrix::Constant(n, n, false);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = i != j && edge(rng);
    }
    return a;
}

Network random_network(int n, double density, std::mt19937_64& rng) {
    const MaskMatrix a = random_digraph(n, density, rng);
    std::uniform_real_distribution<double> weight(0.1, 2.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (a(i, j)) w(i, j) = weight(rng);
        }
    }
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    return Network(names, w, a);
}

ModelOrder random_order(int max_p, int max_s, int max_exog, int max_lag, AlphaMode alpha, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> p_pick(1, max_p);
    std::uniform_int_distribution<int> s_pick(0, max_s);
    std::uniform_int_distribution<int> h_pick(0, max_exog);
    std::uniform_int_distribution<int> q_pick(0, max_lag);
    ModelOrder order;
    order.p = p_pick(rng);
    order.s.clear();
    for (int k = 0; k < order.p; ++k) order.s.push_back(s_pick(rng));
    const int h = h_pick(rng);
    for (int k = 0; k < h; ++k) order.p_prime.push_back(q_pick(rng));
    order.alpha = alpha;
    return order;
}

Eigen::VectorXd random_vector(int size, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = normal(rng);
    return v;
}

std::vector<Eigen::MatrixXd> direct_phi(const ModelOrder& order, const ParameterVector& params, const Network& net) {
    const int n = net.num_nodes();
    const auto stages = stages_by_matrix_powers(net.adjacency());
    const Eigen::MatrixXd& raw = net.raw_weights();
    std::vector<Eigen::MatrixXd> phi;
    for (int k = 1; k <= order.p; ++k) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            m(i, i) += order.alpha == AlphaMode::local ? params.alpha(i, k) : params.alpha(0, k);
            for (int r = 1; r <= order.s[static_cast<std::size_t>(k - 1)]; ++r) {
                const auto& node_stages = stages[static_cast<std::size_t>(i)];
                if (static_cast<int>(node_stages.size()) < r) continue;
                const auto& members = node_stages[static_cast<std::size_t>(r - 1)];
                if (members.empty()) continue;
                double total = 0.0;
                for (int q : members) total += raw(i, q);
                for (int q : members) {
                    const double w = r == 1 ? raw(i, q) / total : 1.0 / static_cast<double>(members.size());
                    m(i, q) += params.beta(k, r) * w;
                }
            }
        }
        phi.push_back(m);
    }
    return phi;
}

Eigen::MatrixXd kron_block(const Eigen::VectorXd& z_t, const Eigen::MatrixXd& r, int n) {
    const auto k = z_t.size();
    Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(n, n * k);
    for (Eigen::Index m = 0; m < k; ++m) {
        for (int i = 0; i < n; ++i) kron(i, m * n + i) = z_t(m);
    }
    return kron * r;
}

namespace {

Eigen::MatrixXd stacked_design(const Eigen::MatrixXd& z, const Eigen::MatrixXd& r, int n) {
    const auto t = z.cols();
    Eigen::MatrixXd x(n * t, r.cols());
    for (Eigen::Index c = 0; c < t; ++c) x.middleRows(c * n, n) = kron_block(z.col(c), r, n);
    return x;
}

Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& block, Eigen::Index copies) {
    const auto n = block.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * copies, n * copies);
    for (Eigen::Index c = 0; c < copies; ++c) out.block(c * n, c * n, n, n) = block;
    return out;
}

}  // namespace

Eigen::VectorXd dense_gls(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                          const Eigen::MatrixXd& sigma) {
    const auto n = static_cast<int>(y.rows());
    const Eigen::MatrixXd x = stacked_design(z, r, n);
    const Eigen::VectorXd v = y.reshaped();
    const Eigen::MatrixXd omega_inv = block_diagonal(sigma, y.cols()).inverse();
    const Eigen::MatrixXd a = x.transpose() * omega_inv * x;
    return a.fullPivLu().solve(x.transpose() * omega_inv * v);
}

Eigen::VectorXd dense_hc2(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                          const Eigen::VectorXd& gamma, const Eigen::MatrixXd& sigma) {
    const auto n = static_cast<int>(y.rows());
    const Eigen::MatrixXd x = stacked_design(z, r, n);
    const Eigen::VectorXd v = y.reshaped();
    // Whitening with the inverse lower Cholesky factor, applied per block.
    const Eigen::MatrixXd l = sigma.llt().matrixL();
    const Eigen::MatrixXd c = block_diagonal(l.inverse(), y.cols());
    const Eigen::MatrixXd xw = c * x;
    const Eigen::VectorXd ew = c * (v - x * gamma);
    const Eigen::MatrixXd bread = (xw.transpose() * xw).inverse();
    const Eigen::MatrixXd hat = xw * bread * xw.transpose();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(r.cols(), r.cols());
    for (Eigen::Index k = 0; k < xw.rows(); ++k) {
        meat += xw.row(k).transpose() * xw.row(k) * (ew(k) * ew(k) / (1.0 - hat(k, k)));
    }
    return (bread * meat * bread).diagonal().cwiseSqrt();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_sd(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace gnarx::oracle
