#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gnarx/network.hpp"
#include "gnarx/stochastic.hpp"

namespace gnarx::fixture {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const noexcept { return path_; }
    [[nodiscard]] fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write_text(const fs::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const fs::path& path);

[[nodiscard]] std::vector<std::string> node_names(int n, const std::string& prefix = "n");

/// Directed graph i -> i+1 and i -> i+3 (mod n) with unit weights.
[[nodiscard]] Network sparse_ring(int n);

/// Local-alpha GNAR(1,[1]) on `net` with alphas spread over [0.15, 0.45] and
/// beta = 0.3, comfortably inside the stationarity region.
[[nodiscard]] ProcessSpec sparse_gnar_process(const Network& net);

}  // namespace gnarx::fixture
