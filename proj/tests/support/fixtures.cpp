#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace gnarx::fixture {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("gnarx_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> node_names(int n, const std::string& prefix) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

Network sparse_ring(int n) {
    const auto names = node_names(n);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        edges.push_back({names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>((i + 1) % n)], 1.0});
        edges.push_back({names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>((i + 3) % n)], 1.0});
    }
    return Network::from_edges(names, edges);
}

ProcessSpec sparse_gnar_process(const Network& net) {
    ModelOrder order;
    order.p = 1;
    order.s = {1};
    order.alpha = AlphaMode::local;
    const int n = net.num_nodes();
    ParameterVector params = ParameterVector::zeros(order, n);
    for (int i = 0; i < n; ++i) params.alpha(i, 1) = 0.15 + 0.3 * static_cast<double>(i) / std::max(1, n - 1);
    params.beta(1, 1) = 0.3;
    return {order, params, net};
}

}  // namespace gnarx::fixture
