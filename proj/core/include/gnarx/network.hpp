#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gnarx/panel.hpp"

namespace gnarx {

struct Edge {
    std::string source;
    std::string target;
    double weight = 1.0;
};

/// Stage-r neighbourhood sets of every node: nodes first reached from i after
/// exactly r directed hops. Stages are disjoint and never contain i.
class NeighbourhoodTable {
public:
    NeighbourhoodTable() = default;
    explicit NeighbourhoodTable(const MaskMatrix& adjacency);

    /// Sorted node indices of stage r >= 1; empty past the last reachable stage.
    [[nodiscard]] const std::vector<int>& stage(int node, int r) const;
    /// Number of non-empty stages of `node`.
    [[nodiscard]] int num_stages(int node) const;
    /// Largest stage count over all nodes (the directed eccentricity maximum).
    [[nodiscard]] int max_stage() const noexcept { return max_stage_; }
    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(stages_.size()); }

private:
    std::vector<std::vector<std::vector<int>>> stages_;
    int max_stage_ = 0;
};

/// Weighted directed graph over the panel's nodes. Holds raw edge weights, the
/// row-normalised connection weights and the cached neighbourhood table.
class Network {
public:
    /// Edge i -> j exists where adjacency(i, j) is true; raw weights must be >= 0.
    Network(std::vector<std::string> nodes, Eigen::MatrixXd raw_weights, MaskMatrix adjacency);
    static Network from_edges(std::vector<std::string> nodes, const std::vector<Edge>& edges);
    /// Unweighted undirected graph given as index pairs; both directions are added.
    static Network undirected(std::vector<std::string> nodes, const std::vector<std::pair<int, int>>& pairs);

    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] int node_index(std::string_view name) const;

    [[nodiscard]] const Eigen::MatrixXd& raw_weights() const noexcept { return raw_; }
    [[nodiscard]] const MaskMatrix& adjacency() const noexcept { return adjacency_; }
    /// Connection weights omega; each row with outgoing weight sums to one.
    [[nodiscard]] const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    [[nodiscard]] const NeighbourhoodTable& neighbourhoods() const noexcept { return *table_; }
    [[nodiscard]] std::vector<int> out_neighbours(int node) const;

    [[nodiscard]] Network with_weights(Eigen::MatrixXd weights) const;

private:
    std::vector<std::string> nodes_;
    Eigen::MatrixXd raw_;
    MaskMatrix adjacency_;
    Eigen::MatrixXd weights_;
    std::shared_ptr<const NeighbourhoodTable> table_;
};

[[nodiscard]] std::vector<int> neighbourhood(const Network& net, int node, int r);
[[nodiscard]] std::vector<int> neighbourhood(const Network& net, std::string_view node, int r);

/// Rows divided by their sum; rows without outgoing weight stay empty.
[[nodiscard]] Network normalize_weights(const Network& net);

[[nodiscard]] Network build_fully_connected(const Eigen::MatrixXd& exports, std::vector<std::string> nodes);
/// One edge per node, to its largest export partner. Tied maxima throw unless
/// `allow_tie_break`, in which case the lowest index wins.
[[nodiscard]] Network build_nearest_neighbour(const Eigen::MatrixXd& exports, std::vector<std::string> nodes,
                                              bool allow_tie_break = false);

/// Drops weight to neighbours outside `observed_now` and rescales each row to
/// one. A row left without observed neighbours becomes empty.
[[nodiscard]] Network renormalize_for_missing(const Network& net, const std::vector<bool>& observed_now);

/// Per-stage weight matrices [W^(r)]_{l,m}, r = 1..max_stage. Stage one uses
/// the connection weights; later stages weight their members equally.
class StageWeights {
public:
    StageWeights() = default;
    StageWeights(const Network& net, int max_stage);

    [[nodiscard]] int max_stage() const noexcept { return static_cast<int>(matrices_.size()); }
    [[nodiscard]] const Eigen::MatrixXd& stage(int r) const { return matrices_.at(static_cast<std::size_t>(r - 1)); }

    /// Stage rows rescaled over the observed members, as in renormalize_for_missing.
    [[nodiscard]] StageWeights renormalized(const std::vector<bool>& observed) const;

private:
    std::vector<Eigen::MatrixXd> matrices_;
};

// Edge-list CSV `source,target,weight`; export matrix CSV with a header row and
// a leading column of node names.
[[nodiscard]] std::vector<Edge> read_edge_list_csv(std::istream& in);
[[nodiscard]] std::vector<Edge> load_edge_list_csv(const std::filesystem::path& path);
struct ExportMatrix {
    std::vector<std::string> nodes;
    Eigen::MatrixXd values;
};
[[nodiscard]] ExportMatrix read_export_matrix_csv(std::istream& in);
[[nodiscard]] ExportMatrix load_export_matrix_csv(const std::filesystem::path& path);
void write_edge_list_csv(std::ostream& out, const Network& net);

/// The five-node undirected test network used throughout the GNAR literature
/// simulations (edges 1-4, 1-5, 2-3, 2-4, 3-4).
[[nodiscard]] Network five_node_network();

}  // namespace gnarx
