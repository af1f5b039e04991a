#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gnarx {

using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// A (year, month) calendar position. Ordered lexicographically.
struct CalendarStamp {
    int year = 1970;
    int month = 1;

    CalendarStamp() = default;
    CalendarStamp(int y, int m);

    /// Parses `YYYY-MM`.
    static CalendarStamp parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] CalendarStamp plus_months(int months) const;
    /// Signed number of months from `other` to this stamp.
    [[nodiscard]] int months_since(const CalendarStamp& other) const;

    friend auto operator<=>(const CalendarStamp&, const CalendarStamp&) = default;
    friend bool operator==(const CalendarStamp&, const CalendarStamp&) = default;
};

/// Node-by-time matrix of observations with a missingness mask and a monthly
/// calendar index. Immutable once built; every transformation returns a new panel.
class Panel {
public:
    Panel(std::vector<std::string> nodes, std::vector<CalendarStamp> times, Eigen::MatrixXd values,
          MaskMatrix observed);
    /// Fully observed panel.
    Panel(std::vector<std::string> nodes, std::vector<CalendarStamp> times, Eigen::MatrixXd values);
    /// Panel on consecutive months starting at `start`.
    static Panel monthly(std::vector<std::string> nodes, CalendarStamp start, Eigen::MatrixXd values,
                         std::optional<MaskMatrix> observed = std::nullopt);

    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] int num_times() const noexcept { return static_cast<int>(times_.size()); }
    [[nodiscard]] const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<CalendarStamp>& times() const noexcept { return times_; }
    [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
    [[nodiscard]] const MaskMatrix& observed() const noexcept { return observed_; }

    [[nodiscard]] double value(int node, int t) const { return values_(node, t); }
    [[nodiscard]] bool is_observed(int node, int t) const { return observed_(node, t); }
    [[nodiscard]] bool fully_observed() const { return observed_.all(); }

    /// Values with unobserved cells replaced by zero.
    [[nodiscard]] Eigen::MatrixXd zero_filled() const;

    [[nodiscard]] int node_index(std::string_view name) const;
    /// Column index of `stamp`, or nullopt when outside the panel range.
    [[nodiscard]] std::optional<int> time_index(const CalendarStamp& stamp) const;

    /// Columns [first, first + count).
    [[nodiscard]] Panel slice_times(int first, int count) const;
    /// Nodes in the order given.
    [[nodiscard]] Panel select_nodes(const std::vector<std::string>& names) const;

private:
    void validate() const;

    std::vector<std::string> nodes_;
    std::vector<CalendarStamp> times_;
    Eigen::MatrixXd values_;
    MaskMatrix observed_;
};

/// Which CSV columns to read, and in what order. Empty selects all columns in
/// header order.
struct ColumnMapping {
    std::vector<std::string> columns;
};

[[nodiscard]] Panel read_panel_csv(std::istream& in, const ColumnMapping& mapping = {});
[[nodiscard]] Panel load_panel_csv(const std::filesystem::path& path, const ColumnMapping& mapping = {});
void write_panel_csv(std::ostream& out, const Panel& panel);
void save_panel_csv(const std::filesystem::path& path, const Panel& panel);

/// out[:, t] = in[:, t + 1] - in[:, t], stamped at the later month.
[[nodiscard]] Panel difference(const Panel& panel);

struct NodeScale {
    double mean = 0.0;
    double sd = 1.0;
};

struct StandardizedPanel {
    Panel panel;
    std::vector<NodeScale> scales;
};

/// Per-node zero mean and unit sample standard deviation over observed cells.
[[nodiscard]] StandardizedPanel standardize(const Panel& panel);
[[nodiscard]] Panel destandardize(const Panel& panel, const std::vector<NodeScale>& scales);

/// Cells strictly before `cutoff` become observed zeros.
[[nodiscard]] Panel zero_fill_before(const Panel& panel, const CalendarStamp& cutoff);

/// Shortest round-trip decimal representation (at least 15 significant digits).
[[nodiscard]] std::string format_double(double value);

}  // namespace gnarx
