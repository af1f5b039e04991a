#include "gnarx/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gnarx/errors.hpp"

namespace gnarx {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (begin != end && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

CalendarStamp::CalendarStamp(int y, int m) : year(y), month(m) {
    if (m < 1 || m > 12) {
        throw ValidationError("month out of range: " + std::to_string(m));
    }
}

CalendarStamp CalendarStamp::parse(std::string_view text) {
    const std::string s = trim(text);
    int y = 0;
    int m = 0;
    const auto dash = s.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= s.size()) {
        throw ParseError("malformed date '" + s + "' (expected YYYY-MM)");
    }
    auto r1 = std::from_chars(s.data(), s.data() + dash, y);
    auto r2 = std::from_chars(s.data() + dash + 1, s.data() + s.size(), m);
    if (r1.ec != std::errc() || r1.ptr != s.data() + dash || r2.ec != std::errc() ||
        r2.ptr != s.data() + s.size() || m < 1 || m > 12) {
        throw ParseError("malformed date '" + s + "' (expected YYYY-MM)");
    }
    return {y, m};
}

std::string CalendarStamp::to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

CalendarStamp CalendarStamp::plus_months(int months) const {
    const int index = year * 12 + (month - 1) + months;
    const int y = index >= 0 ? index / 12 : -((-index + 11) / 12);
    return {y, index - y * 12 + 1};
}

int CalendarStamp::months_since(const CalendarStamp& other) const {
    return (year * 12 + month) - (other.year * 12 + other.month);
}

Panel::Panel(std::vector<std::string> nodes, std::vector<CalendarStamp> times, Eigen::MatrixXd values,
             MaskMatrix observed)
    : nodes_(std::move(nodes)),
      times_(std::move(times)),
      values_(std::move(values)),
      observed_(std::move(observed)) {
    validate();
}

Panel::Panel(std::vector<std::string> nodes, std::vector<CalendarStamp> times, Eigen::MatrixXd values)
    : nodes_(std::move(nodes)), times_(std::move(times)), values_(std::move(values)) {
    observed_ = MaskMatrix::Constant(values_.rows(), values_.cols(), true);
    validate();
}

Panel Panel::monthly(std::vector<std::string> nodes, CalendarStamp start, Eigen::MatrixXd values,
                     std::optional<MaskMatrix> observed) {
    std::vector<CalendarStamp> times;
    times.reserve(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index t = 0; t < values.cols(); ++t) times.push_back(start.plus_months(static_cast<int>(t)));
    if (observed) return {std::move(nodes), std::move(times), std::move(values), std::move(*observed)};
    return {std::move(nodes), std::move(times), std::move(values)};
}

void Panel::validate() const {
    if (nodes_.empty() || times_.empty()) {
        throw DimensionError("panel needs at least one node and one time point");
    }
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    const auto t = static_cast<Eigen::Index>(times_.size());
    if (values_.rows() != n || values_.cols() != t || observed_.rows() != n || observed_.cols() != t) {
        throw DimensionError("panel values/mask shape does not match nodes x times");
    }
    std::set<std::string> seen;
    for (const auto& name : nodes_) {
        if (!seen.insert(name).second) throw FormatError("duplicated node name '" + name + "'");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (times_[i] == times_[i - 1]) {
            throw FormatError("duplicated timestamp " + times_[i].to_string());
        }
        if (times_[i].months_since(times_[i - 1]) != 1) {
            throw FormatError("timestamps must advance one month at a time (at " + times_[i].to_string() + ")");
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
            if (observed_(i, j) && !std::isfinite(values_(i, j))) {
                throw ValidationError("non-finite observed value for node '" + nodes_[i] + "' at " +
                                      times_[j].to_string());
            }
        }
    }
}

Eigen::MatrixXd Panel::zero_filled() const {
    return observed_.select(values_, Eigen::MatrixXd::Zero(values_.rows(), values_.cols()));
}

int Panel::node_index(std::string_view name) const {
    auto it = std::find(nodes_.begin(), nodes_.end(), name);
    if (it == nodes_.end()) throw LookupError("unknown node '" + std::string(name) + "'");
    return static_cast<int>(it - nodes_.begin());
}

std::optional<int> Panel::time_index(const CalendarStamp& stamp) const {
    const int offset = stamp.months_since(times_.front());
    if (offset < 0 || offset >= num_times()) return std::nullopt;
    return offset;
}

Panel Panel::slice_times(int first, int count) const {
    if (first < 0 || count < 1 || first + count > num_times()) {
        throw DimensionError("time slice out of range");
    }
    std::vector<CalendarStamp> times(times_.begin() + first, times_.begin() + first + count);
    return {nodes_, std::move(times), values_.middleCols(first, count), observed_.middleCols(first, count)};
}

Panel Panel::select_nodes(const std::vector<std::string>& names) const {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(names.size()), values_.cols());
    MaskMatrix observed(static_cast<Eigen::Index>(names.size()), values_.cols());
    for (std::size_t k = 0; k < names.size(); ++k) {
        const int i = node_index(names[k]);
        values.row(static_cast<Eigen::Index>(k)) = values_.row(i);
        observed.row(static_cast<Eigen::Index>(k)) = observed_.row(i);
    }
    return {names, times_, std::move(values), std::move(observed)};
}

Panel read_panel_csv(std::istream& in, const ColumnMapping& mapping) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty panel CSV");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    if (header.size() < 2 || header.front() != "date") {
        throw FormatError("panel CSV header must be 'date,<node1>,...'");
    }

    std::vector<std::string> nodes(header.begin() + 1, header.end());
    std::vector<std::size_t> picks;
    if (mapping.columns.empty()) {
        for (std::size_t k = 0; k < nodes.size(); ++k) picks.push_back(k + 1);
    } else {
        for (const auto& c : mapping.columns) {
            auto it = std::find(nodes.begin(), nodes.end(), c);
            if (it == nodes.end()) throw LookupError("column '" + c + "' not in panel CSV header");
            picks.push_back(static_cast<std::size_t>(it - nodes.begin()) + 1);
        }
        nodes = mapping.columns;
    }

    std::vector<CalendarStamp> times;
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<bool>> masks;
    int row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw FormatError("row " + std::to_string(row_number) + ": expected " +
                              std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        CalendarStamp stamp;
        try {
            stamp = CalendarStamp::parse(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError("row " + std::to_string(row_number) + ": " + e.what());
        }
        if (!times.empty() && stamp == times.back()) {
            throw FormatError("row " + std::to_string(row_number) + ": duplicated timestamp " + stamp.to_string());
        }
        times.push_back(stamp);
        std::vector<double> row(picks.size(), 0.0);
        std::vector<bool> mask(picks.size(), false);
        for (std::size_t k = 0; k < picks.size(); ++k) {
            const std::string cell = trim(fields[picks[k]]);
            if (cell.empty()) continue;
            double v = 0.0;
            if (!parse_double(cell, v) || !std::isfinite(v)) {
                throw ParseError("row " + std::to_string(row_number) + ", column '" + nodes[k] +
                                 "': non-numeric cell '" + cell + "'");
            }
            row[k] = v;
            mask[k] = true;
        }
        rows.push_back(std::move(row));
        masks.push_back(std::move(mask));
    }
    if (times.empty()) throw FormatError("panel CSV has no data rows");

    std::vector<std::size_t> order(times.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (times[order[k]] == times[order[k - 1]]) {
            throw FormatError("duplicated timestamp " + times[order[k]].to_string());
        }
    }

    const auto n = static_cast<Eigen::Index>(nodes.size());
    const auto t = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, t);
    MaskMatrix observed = MaskMatrix::Constant(n, t, false);
    std::vector<CalendarStamp> sorted_times;
    sorted_times.reserve(times.size());
    for (Eigen::Index j = 0; j < t; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        sorted_times.push_back(times[src]);
        for (Eigen::Index i = 0; i < n; ++i) {
            values(i, j) = rows[src][static_cast<std::size_t>(i)];
            observed(i, j) = masks[src][static_cast<std::size_t>(i)];
        }
    }
    return {std::move(nodes), std::move(sorted_times), std::move(values), std::move(observed)};
}

Panel load_panel_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open panel CSV '" + path.string() + "'");
    return read_panel_csv(in, mapping);
}

std::string format_double(double value) {
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
    out << "date";
    for (const auto& n : panel.nodes()) out << ',' << n;
    out << '\n';
    for (int t = 0; t < panel.num_times(); ++t) {
        out << panel.times()[static_cast<std::size_t>(t)].to_string();
        for (int i = 0; i < panel.num_nodes(); ++i) {
            out << ',';
            if (panel.is_observed(i, t)) out << format_double(panel.value(i, t));
        }
        out << '\n';
    }
}

void save_panel_csv(const std::filesystem::path& path, const Panel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write panel CSV '" + path.string() + "'");
    write_panel_csv(out, panel);
}

Panel difference(const Panel& panel) {
    const int t = panel.num_times();
    if (t < 2) throw DimensionError("difference needs at least two time points");
    const auto& v = panel.values();
    const auto& m = panel.observed();
    Eigen::MatrixXd out = v.rightCols(t - 1) - v.leftCols(t - 1);
    MaskMatrix mask = m.rightCols(t - 1).array() && m.leftCols(t - 1).array();
    out = mask.select(out, Eigen::MatrixXd::Zero(out.rows(), out.cols()));
    std::vector<CalendarStamp> times(panel.times().begin() + 1, panel.times().end());
    return {panel.nodes(), std::move(times), std::move(out), std::move(mask)};
}

StandardizedPanel standardize(const Panel& panel) {
    Eigen::MatrixXd out = panel.values();
    std::vector<NodeScale> scales;
    for (int i = 0; i < panel.num_nodes(); ++i) {
        double sum = 0.0;
        int count = 0;
        for (int t = 0; t < panel.num_times(); ++t) {
            if (panel.is_observed(i, t)) {
                sum += panel.value(i, t);
                ++count;
            }
        }
        if (count < 2) {
            throw ValidationError("node '" + panel.nodes()[static_cast<std::size_t>(i)] +
                                  "' has fewer than two observations; cannot standardize");
        }
        const double mean = sum / count;
        double ss = 0.0;
        for (int t = 0; t < panel.num_times(); ++t) {
            if (panel.is_observed(i, t)) ss += (panel.value(i, t) - mean) * (panel.value(i, t) - mean);
        }
        const double sd = std::sqrt(ss / (count - 1));
        if (!(sd > 0.0)) {
            throw ValidationError("degenerate scale: node '" + panel.nodes()[static_cast<std::size_t>(i)] +
                                  "' has zero variance");
        }
        for (int t = 0; t < panel.num_times(); ++t) {
            if (panel.is_observed(i, t)) out(i, t) = (panel.value(i, t) - mean) / sd;
        }
        scales.push_back({mean, sd});
    }
    return {Panel(panel.nodes(), panel.times(), std::move(out), panel.observed()), std::move(scales)};
}

Panel destandardize(const Panel& panel, const std::vector<NodeScale>& scales) {
    if (static_cast<int>(scales.size()) != panel.num_nodes()) {
        throw DimensionError("one scale per node required");
    }
    Eigen::MatrixXd out = panel.values();
    for (int i = 0; i < panel.num_nodes(); ++i) {
        const auto& s = scales[static_cast<std::size_t>(i)];
        for (int t = 0; t < panel.num_times(); ++t) {
            if (panel.is_observed(i, t)) out(i, t) = panel.value(i, t) * s.sd + s.mean;
        }
    }
    return {panel.nodes(), panel.times(), std::move(out), panel.observed()};
}

Panel zero_fill_before(const Panel& panel, const CalendarStamp& cutoff) {
    Eigen::MatrixXd values = panel.values();
    MaskMatrix observed = panel.observed();
    for (int t = 0; t < panel.num_times(); ++t) {
        if (panel.times()[static_cast<std::size_t>(t)] < cutoff) {
            values.col(t).setZero();
            observed.col(t).setConstant(true);
        }
    }
    return {panel.nodes(), panel.times(), std::move(values), std::move(observed)};
}

}  // namespace gnarx
