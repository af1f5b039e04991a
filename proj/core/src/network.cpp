#include "gnarx/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gnarx/errors.hpp"

namespace gnarx {

namespace {

const std::vector<int> kEmptyStage;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        auto first = field.find_first_not_of(" \t\r");
        auto last = field.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? std::string{} : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_weight(const std::string& text, int row) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ": non-numeric weight '" + text + "'");
    }
    return v;
}

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& raw, const MaskMatrix& adjacency) {
    Eigen::MatrixXd w = adjacency.select(raw, Eigen::MatrixXd::Zero(raw.rows(), raw.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double total = w.row(i).sum();
        if (total > 0.0) w.row(i) /= total;
    }
    return w;
}

}  // namespace

NeighbourhoodTable::NeighbourhoodTable(const MaskMatrix& adjacency) {
    const auto n = static_cast<int>(adjacency.rows());
    stages_.resize(static_cast<std::size_t>(n));
    std::vector<int> level(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::fill(level.begin(), level.end(), -1);
        level[static_cast<std::size_t>(i)] = 0;
        std::vector<int> frontier{i};
        auto& stages = stages_[static_cast<std::size_t>(i)];
        while (!frontier.empty()) {
            std::vector<int> next;
            for (int u : frontier) {
                for (int v = 0; v < n; ++v) {
                    if (adjacency(u, v) && level[static_cast<std::size_t>(v)] < 0) {
                        level[static_cast<std::size_t>(v)] = static_cast<int>(stages.size()) + 1;
                        next.push_back(v);
                    }
                }
            }
            if (next.empty()) break;
            std::sort(next.begin(), next.end());
            stages.push_back(next);
            frontier = std::move(next);
        }
        max_stage_ = std::max(max_stage_, static_cast<int>(stages.size()));
    }
}

const std::vector<int>& NeighbourhoodTable::stage(int node, int r) const {
    if (node < 0 || node >= num_nodes()) throw LookupError("node index out of range");
    if (r < 1) throw ValidationError("neighbourhood stage must be >= 1");
    const auto& stages = stages_[static_cast<std::size_t>(node)];
    if (r > static_cast<int>(stages.size())) return kEmptyStage;
    return stages[static_cast<std::size_t>(r - 1)];
}

int NeighbourhoodTable::num_stages(int node) const {
    if (node < 0 || node >= num_nodes()) throw LookupError("node index out of range");
    return static_cast<int>(stages_[static_cast<std::size_t>(node)].size());
}

Network::Network(std::vector<std::string> nodes, Eigen::MatrixXd raw_weights, MaskMatrix adjacency)
    : nodes_(std::move(nodes)), raw_(std::move(raw_weights)), adjacency_(std::move(adjacency)) {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    if (n < 1) throw DimensionError("network needs at least one node");
    if (raw_.rows() != n || raw_.cols() != n || adjacency_.rows() != n || adjacency_.cols() != n) {
        throw DimensionError("network weight matrix must be N x N");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency_(i, i)) throw ValidationError("self-loop on node '" + nodes_[static_cast<std::size_t>(i)] + "'");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (adjacency_(i, j) && (raw_(i, j) < 0.0 || !std::isfinite(raw_(i, j)))) {
                throw ValidationError("negative or non-finite weight on edge " + nodes_[static_cast<std::size_t>(i)] +
                                      " -> " + nodes_[static_cast<std::size_t>(j)]);
            }
        }
    }
    weights_ = row_normalized(raw_, adjacency_);
    table_ = std::make_shared<const NeighbourhoodTable>(adjacency_);
}

Network Network::from_edges(std::vector<std::string> nodes, const std::vector<Edge>& edges) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    MaskMatrix adjacency = MaskMatrix::Constant(n, n, false);
    auto index_of = [&](const std::string& name) {
        auto it = std::find(nodes.begin(), nodes.end(), name);
        if (it == nodes.end()) throw LookupError("edge references unknown node '" + name + "'");
        return static_cast<Eigen::Index>(it - nodes.begin());
    };
    for (const auto& e : edges) {
        const auto i = index_of(e.source);
        const auto j = index_of(e.target);
        if (e.weight < 0.0) throw ValidationError("negative weight on edge " + e.source + " -> " + e.target);
        adjacency(i, j) = true;
        raw(i, j) += e.weight;
    }
    return {std::move(nodes), std::move(raw), std::move(adjacency)};
}

Network Network::undirected(std::vector<std::string> nodes, const std::vector<std::pair<int, int>>& pairs) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    MaskMatrix adjacency = MaskMatrix::Constant(n, n, false);
    for (auto [a, b] : pairs) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw LookupError("edge index out of range");
        adjacency(a, b) = adjacency(b, a) = true;
        raw(a, b) = raw(b, a) = 1.0;
    }
    return {std::move(nodes), std::move(raw), std::move(adjacency)};
}

int Network::node_index(std::string_view name) const {
    auto it = std::find(nodes_.begin(), nodes_.end(), name);
    if (it == nodes_.end()) throw LookupError("unknown node '" + std::string(name) + "'");
    return static_cast<int>(it - nodes_.begin());
}

std::vector<int> Network::out_neighbours(int node) const {
    std::vector<int> out;
    for (int j = 0; j < num_nodes(); ++j) {
        if (adjacency_(node, j)) out.push_back(j);
    }
    return out;
}

Network Network::with_weights(Eigen::MatrixXd weights) const {
    Network copy = *this;
    copy.weights_ = std::move(weights);
    return copy;
}

std::vector<int> neighbourhood(const Network& net, int node, int r) {
    return net.neighbourhoods().stage(node, r);
}

std::vector<int> neighbourhood(const Network& net, std::string_view node, int r) {
    return net.neighbourhoods().stage(net.node_index(node), r);
}

Network normalize_weights(const Network& net) {
    return {net.nodes(), net.weights(), net.adjacency()};
}

Network build_fully_connected(const Eigen::MatrixXd& exports, std::vector<std::string> nodes) {
    const auto n = exports.rows();
    if (exports.cols() != n || static_cast<Eigen::Index>(nodes.size()) != n) {
        throw DimensionError("export matrix must be N x N with one name per node");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (exports(i, i) != 0.0) throw ValidationError("export matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (exports(i, j) < 0.0) throw ValidationError("negative export quantity");
        }
    }
    MaskMatrix adjacency = MaskMatrix::Constant(n, n, true);
    adjacency.diagonal().setConstant(false);
    return {std::move(nodes), exports, std::move(adjacency)};
}

Network build_nearest_neighbour(const Eigen::MatrixXd& exports, std::vector<std::string> nodes,
                                bool allow_tie_break) {
    const auto n = exports.rows();
    if (exports.cols() != n || static_cast<Eigen::Index>(nodes.size()) != n) {
        throw DimensionError("export matrix must be N x N with one name per node");
    }
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    MaskMatrix adjacency = MaskMatrix::Constant(n, n, false);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = -1;
        int ties = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (exports(i, j) < 0.0) throw ValidationError("negative export quantity");
            if (best < 0 || exports(i, j) > exports(i, best)) {
                best = j;
                ties = 0;
            } else if (exports(i, j) == exports(i, best)) {
                ++ties;
            }
        }
        const auto& name = nodes[static_cast<std::size_t>(i)];
        if (best < 0 || !(exports(i, best) > 0.0)) {
            throw ValidationError("nearest-neighbour construction: node '" + name + "' has no positive exports");
        }
        if (ties > 0 && !allow_tie_break) {
            throw ValidationError("nearest-neighbour construction: tied maximum for node '" + name + "'");
        }
        adjacency(i, best) = true;
        raw(i, best) = 1.0;
    }
    return {std::move(nodes), std::move(raw), std::move(adjacency)};
}

Network renormalize_for_missing(const Network& net, const std::vector<bool>& observed_now) {
    const int n = net.num_nodes();
    if (static_cast<int>(observed_now.size()) != n) throw DimensionError("observation vector length != N");
    Eigen::MatrixXd w = net.weights();
    for (int j = 0; j < n; ++j) {
        if (!observed_now[static_cast<std::size_t>(j)]) w.col(j).setZero();
    }
    for (int i = 0; i < n; ++i) {
        const double total = w.row(i).sum();
        if (total > 0.0) w.row(i) /= total;
    }
    return net.with_weights(std::move(w));
}

StageWeights::StageWeights(const Network& net, int max_stage) {
    const int n = net.num_nodes();
    const auto& table = net.neighbourhoods();
    for (int r = 1; r <= max_stage; ++r) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        for (int l = 0; l < n; ++l) {
            const auto& members = table.stage(l, r);
            if (members.empty()) continue;
            if (r == 1) {
                for (int m : members) w(l, m) = net.weights()(l, m);
            } else {
                const double share = 1.0 / static_cast<double>(members.size());
                for (int m : members) w(l, m) = share;
            }
        }
        matrices_.push_back(std::move(w));
    }
}

StageWeights StageWeights::renormalized(const std::vector<bool>& observed) const {
    StageWeights out = *this;
    for (auto& w : out.matrices_) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            if (!observed[static_cast<std::size_t>(j)]) w.col(j).setZero();
        }
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double total = w.row(i).sum();
            if (total > 0.0) w.row(i) /= total;
        }
    }
    return out;
}

std::vector<Edge> read_edge_list_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty edge-list CSV");
    auto header = split_fields(line);
    if (header.size() != 3 || header[0] != "source" || header[1] != "target" || header[2] != "weight") {
        throw FormatError("edge-list CSV header must be 'source,target,weight'");
    }
    std::vector<Edge> edges;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = split_fields(line);
        if (f.size() != 3) throw FormatError("row " + std::to_string(row) + ": expected 3 fields");
        edges.push_back({f[0], f[1], parse_weight(f[2], row)});
    }
    return edges;
}

std::vector<Edge> load_edge_list_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge-list CSV '" + path.string() + "'");
    return read_edge_list_csv(in);
}

ExportMatrix read_export_matrix_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty export-matrix CSV");
    auto header = split_fields(line);
    if (header.size() < 2) throw FormatError("export-matrix CSV needs a header of node names");
    ExportMatrix out;
    out.nodes.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(out.nodes.size());
    out.values = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index i = 0;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = split_fields(line);
        if (static_cast<Eigen::Index>(f.size()) != n + 1) {
            throw FormatError("row " + std::to_string(row) + ": expected " + std::to_string(n + 1) + " fields");
        }
        if (i >= n) throw FormatError("export-matrix CSV has more rows than columns");
        if (f[0] != out.nodes[static_cast<std::size_t>(i)]) {
            throw FormatError("row " + std::to_string(row) + ": row label '" + f[0] + "' does not match header order");
        }
        for (Eigen::Index j = 0; j < n; ++j) out.values(i, j) = parse_weight(f[static_cast<std::size_t>(j + 1)], row);
        ++i;
    }
    if (i != n) throw FormatError("export-matrix CSV must be square");
    return out;
}

ExportMatrix load_export_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open export-matrix CSV '" + path.string() + "'");
    return read_export_matrix_csv(in);
}

void write_edge_list_csv(std::ostream& out, const Network& net) {
    out << "source,target,weight\n";
    for (int i = 0; i < net.num_nodes(); ++i) {
        for (int j = 0; j < net.num_nodes(); ++j) {
            if (net.adjacency()(i, j)) {
                out << net.nodes()[static_cast<std::size_t>(i)] << ',' << net.nodes()[static_cast<std::size_t>(j)]
                    << ',' << format_double(net.raw_weights()(i, j)) << '\n';
            }
        }
    }
}

Network five_node_network() {
    return Network::undirected({"1", "2", "3", "4", "5"}, {{0, 3}, {0, 4}, {1, 2}, {1, 3}, {2, 3}});
}

}  // namespace gnarx
