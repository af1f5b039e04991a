#include "gnarx/midas.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "gnarx/errors.hpp"

namespace gnarx {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// (column, weight) pairs a quarter's regressor draws on, or nothing if a
// weighted month is absent or unobserved.
std::optional<std::vector<std::pair<int, double>>> mapped_columns(const MonthlySeries& series,
                                                                  const QuarterStamp& quarter,
                                                                  const MidasSpec& spec) {
    if (series.months.empty()) return std::nullopt;
    const Eigen::VectorXd w = spec.weights();
    std::vector<std::pair<int, double>> out;
    for (int k = 0; k < spec.lags; ++k) {
        if (w(k) == 0.0) continue;
        const CalendarStamp month = quarter.last_month().plus_months(-k);
        const int index = month.months_since(series.months.front());
        if (index < 0 || index >= static_cast<int>(series.months.size()) ||
            series.months[static_cast<std::size_t>(index)] != month || !series.observed[static_cast<std::size_t>(index)]) {
            return std::nullopt;
        }
        out.emplace_back(index, w(k));
    }
    return out;
}

}  // namespace

QuarterStamp::QuarterStamp(int y, int q) : year(y), quarter(q) {
    if (q < 1 || q > 4) throw ParseError("quarter must lie in 1..4, got " + std::to_string(q));
}

QuarterStamp QuarterStamp::parse(std::string_view text) {
    const std::string s = trim(std::string(text));
    if (s.size() != 7 || s[4] != '-' || (s[5] != 'Q' && s[5] != 'q')) {
        throw ParseError("expected a quarter as YYYY-Qn, got '" + s + "'");
    }
    for (int i = 0; i < 4; ++i) {
        if (s[static_cast<std::size_t>(i)] < '0' || s[static_cast<std::size_t>(i)] > '9') {
            throw ParseError("expected a quarter as YYYY-Qn, got '" + s + "'");
        }
    }
    if (s[6] < '1' || s[6] > '4') throw ParseError("quarter must lie in 1..4 in '" + s + "'");
    return {std::stoi(s.substr(0, 4)), s[6] - '0'};
}

std::string QuarterStamp::to_string() const { return std::to_string(year) + "-Q" + std::to_string(quarter); }

QuarterStamp QuarterStamp::next() const { return quarter == 4 ? QuarterStamp{year + 1, 1} : QuarterStamp{year, quarter + 1}; }

CalendarStamp QuarterStamp::last_month() const { return {year, quarter * 3}; }

void QuarterlySeries::validate() const {
    if (quarters.size() != static_cast<std::size_t>(values.size()) || observed.size() != quarters.size()) {
        throw DimensionError("quarterly series fields differ in length");
    }
    for (std::size_t i = 1; i < quarters.size(); ++i) {
        if (quarters[i] != quarters[i - 1].next()) {
            throw FormatError("quarters must be consecutive (at " + quarters[i].to_string() + ")");
        }
    }
    for (std::size_t i = 0; i < quarters.size(); ++i) {
        if (observed[i] && !std::isfinite(values(static_cast<Eigen::Index>(i)))) {
            throw ValidationError("non-finite growth value at " + quarters[i].to_string());
        }
    }
}

QuarterlySeries read_quarterly_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("quarterly CSV is empty");
    {
        std::istringstream header(line);
        std::string a;
        std::string b;
        std::getline(header, a, ',');
        std::getline(header, b, ',');
        if (trim(a) != "quarter" || trim(b) != "growth") throw FormatError("quarterly CSV header must be quarter,growth");
    }
    QuarterlySeries series;
    std::vector<double> values;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("row " + std::to_string(row) + ": expected two fields");
        try {
            series.quarters.push_back(QuarterStamp::parse(line.substr(0, comma)));
        } catch (const ParseError& e) {
            throw ParseError("row " + std::to_string(row) + ": " + e.what());
        }
        const std::string cell = trim(line.substr(comma + 1));
        if (cell.empty()) {
            values.push_back(0.0);
            series.observed.push_back(false);
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != cell.size()) throw ParseError("row " + std::to_string(row) + ": bad number '" + cell + "'");
        values.push_back(v);
        series.observed.push_back(true);
    }
    series.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    series.validate();
    return series;
}

QuarterlySeries load_quarterly_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open quarterly file " + path.string());
    return read_quarterly_csv(in);
}

MidasMode parse_midas_mode(std::string_view text) {
    if (text == "single_lag" || text == "single-lag") return MidasMode::single_lag;
    if (text == "almon") return MidasMode::almon;
    throw ConfigError("unknown MIDAS mode '" + std::string(text) + "'");
}

void MidasSpec::validate() const {
    if (lags < 1) throw ConfigError("MIDAS needs at least one monthly lag");
    if (lag_index < 0 || lag_index >= lags) throw ConfigError("MIDAS lag_index must lie in 0..lags-1");
    if (!std::isfinite(theta1) || !std::isfinite(theta2)) throw ConfigError("Almon parameters must be finite");
}

Eigen::VectorXd almon_weights(double theta1, double theta2, int lags) {
    if (lags < 1) throw ValidationError("Almon weights need at least one lag");
    Eigen::VectorXd exponent(lags);
    for (int k = 0; k < lags; ++k) exponent(k) = theta1 * k + theta2 * k * k;
    const Eigen::VectorXd w = (exponent.array() - exponent.maxCoeff()).exp();
    return w / w.sum();
}

Eigen::VectorXd MidasSpec::weights() const {
    validate();
    if (mode == MidasMode::almon) return almon_weights(theta1, theta2, lags);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(lags);
    w(lag_index) = 1.0;
    return w;
}

MonthlySeries MonthlySeries::from_panel(const Panel& panel, std::string_view node) {
    const int i = panel.node_index(node);
    MonthlySeries out;
    out.months = panel.times();
    out.values = panel.values().row(i).transpose();
    out.observed.resize(static_cast<std::size_t>(panel.num_times()));
    for (int t = 0; t < panel.num_times(); ++t) out.observed[static_cast<std::size_t>(t)] = panel.is_observed(i, t);
    return out;
}

std::optional<double> MonthlySeries::regressor(const QuarterStamp& quarter, const MidasSpec& spec) const {
    const auto columns = mapped_columns(*this, quarter, spec);
    if (!columns) return std::nullopt;
    double total = 0.0;
    for (const auto& [index, weight] : *columns) total += weight * values(index);
    return total;
}

AlignedRows align_midas(const MonthlySeries& monthly, const QuarterlySeries& quarterly, const MidasSpec& spec) {
    spec.validate();
    quarterly.validate();
    AlignedRows out;
    for (std::size_t q = 0; q < quarterly.quarters.size(); ++q) {
        if (!quarterly.observed[q]) continue;
        const auto x = monthly.regressor(quarterly.quarters[q], spec);
        if (!x) {
            out.warnings.push_back("dropped " + quarterly.quarters[q].to_string() + ": mapped month not observed");
            continue;
        }
        out.rows.push_back({quarterly.quarters[q], *x, quarterly.values(static_cast<Eigen::Index>(q))});
    }
    return out;
}

MidasFit fit_midas(const std::vector<MidasRow>& rows, bool intercept) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < 3) throw ValidationError("bridge regression needs at least 3 rows, got " + std::to_string(n));
    Eigen::VectorXd x(n);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        x(r) = rows[static_cast<std::size_t>(r)].regressor;
        y(r) = rows[static_cast<std::size_t>(r)].growth;
    }
    MidasFit fit;
    fit.rows = static_cast<int>(n);
    if (intercept) {
        const double xm = x.mean();
        const double ym = y.mean();
        const double sxx = (x.array() - xm).square().sum();
        if (!(sxx > 1e-14 * std::max(1.0, x.squaredNorm()))) {
            throw SingularityError("bridge regressor has zero variance");
        }
        fit.slope = ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
        fit.intercept = ym - fit.slope * xm;
    } else {
        const double sxx = x.squaredNorm();
        if (!(sxx > 0.0)) throw SingularityError("bridge regressor is identically zero");
        fit.slope = x.dot(y) / sxx;
    }
    const Eigen::ArrayXd e = y.array() - fit.intercept - fit.slope * x.array();
    fit.residual_sd = std::sqrt((e - e.mean()).square().sum() / static_cast<double>(n - 1));
    return fit;
}

MonthlyDistribution extend_with_forecast(const MonthlySeries& history, const Eigen::VectorXd& point,
                                         const Eigen::MatrixXd& replicates) {
    if (history.months.empty()) throw ValidationError("monthly history is empty");
    if (replicates.cols() != point.size()) throw DimensionError("replicate paths must match the forecast horizon");
    const auto t0 = static_cast<Eigen::Index>(history.months.size());
    const Eigen::Index h = point.size();

    MonthlyDistribution out;
    out.point.months = history.months;
    for (Eigen::Index k = 1; k <= h; ++k) out.point.months.push_back(history.months.back().plus_months(static_cast<int>(k)));
    out.point.values.resize(t0 + h);
    out.point.values << history.values, point;
    out.point.observed = history.observed;
    out.point.observed.resize(static_cast<std::size_t>(t0 + h), true);

    out.replicates.resize(replicates.rows(), t0 + h);
    for (Eigen::Index b = 0; b < replicates.rows(); ++b) {
        out.replicates.row(b).head(t0) = history.values.transpose();
        out.replicates.row(b).tail(h) = replicates.row(b);
    }
    return out;
}

std::vector<QuarterProjection> project_gdp(const MidasFit& fit, const MidasSpec& spec,
                                           const MonthlyDistribution& distribution,
                                           const std::vector<QuarterStamp>& quarters, RngSpec rng, double alpha) {
    if (distribution.replicates.rows() == 0) throw ValidationError("no forecast replicates to project");
    if (distribution.replicates.cols() != static_cast<Eigen::Index>(distribution.point.months.size())) {
        throw DimensionError("replicate paths must cover every month of the distribution");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");

    std::vector<QuarterProjection> out;
    for (std::size_t q = 0; q < quarters.size(); ++q) {
        const auto columns = mapped_columns(distribution.point, quarters[q], spec);
        if (!columns) {
            throw ValidationError("forecast distribution does not cover the months mapped to " + quarters[q].to_string());
        }
        double x_point = 0.0;
        for (const auto& [index, weight] : *columns) x_point += weight * distribution.point.values(index);

        auto engine = rng.with_stream(q).engine();
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> draws(static_cast<std::size_t>(distribution.replicates.rows()));
        for (Eigen::Index b = 0; b < distribution.replicates.rows(); ++b) {
            double x = 0.0;
            for (const auto& [index, weight] : *columns) x += weight * distribution.replicates(b, index);
            draws[static_cast<std::size_t>(b)] = fit.intercept + fit.slope * x + fit.residual_sd * normal(engine);
        }
        out.push_back({quarters[q], fit.intercept + fit.slope * x_point, quantile(draws, alpha / 2.0),
                       quantile(draws, 1.0 - alpha / 2.0)});
    }
    return out;
}

void write_projection_csv(std::ostream& out, const std::vector<ScenarioProjection>& projections) {
    out << "quarter,scenario,point,lo95,hi95\n";
    if (projections.empty()) return;
    const std::size_t count = projections.front().quarters.size();
    for (std::size_t q = 0; q < count; ++q) {
        for (const auto& s : projections) {
            const auto& p = s.quarters.at(q);
            out << p.quarter.to_string() << ',' << s.scenario << ',' << format_double(p.point) << ','
                << format_double(p.lower) << ',' << format_double(p.upper) << '\n';
        }
    }
}

}  // namespace gnarx
