#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gnarx/panel.hpp"
#include "gnarx/stochastic.hpp"

namespace gnarx {

struct QuarterStamp {
    int year = 1970;
    int quarter = 1;

    QuarterStamp() = default;
    QuarterStamp(int y, int q);
    /// "YYYY-Qn".
    static QuarterStamp parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] QuarterStamp next() const;
    [[nodiscard]] CalendarStamp last_month() const;

    friend auto operator<=>(const QuarterStamp&, const QuarterStamp&) = default;
    friend bool operator==(const QuarterStamp&, const QuarterStamp&) = default;
};

struct QuarterlySeries {
    std::vector<QuarterStamp> quarters;
    Eigen::VectorXd values;
    std::vector<bool> observed;

    /// Consecutive quarters, matching lengths, finite observed values.
    void validate() const;
};

[[nodiscard]] QuarterlySeries read_quarterly_csv(std::istream& in);
[[nodiscard]] QuarterlySeries load_quarterly_csv(const std::filesystem::path& path);

enum class MidasMode { single_lag, almon };

[[nodiscard]] MidasMode parse_midas_mode(std::string_view text);

/// Monthly lag k counts back from the last month of a quarter, so with K = 3
/// lag 2 is the quarter's first month.
struct MidasSpec {
    MidasMode mode = MidasMode::single_lag;
    int lags = 3;
    int lag_index = 2;
    double theta1 = 0.0;
    double theta2 = 0.0;
    bool intercept = true;

    void validate() const;
    /// Weights over lags 0..K-1; a unit vector at lag_index in single-lag mode.
    [[nodiscard]] Eigen::VectorXd weights() const;
};

/// w_k = exp(theta1 k + theta2 k^2) / sum_j exp(theta1 j + theta2 j^2), k = 0..K-1.
[[nodiscard]] Eigen::VectorXd almon_weights(double theta1, double theta2, int lags);

/// Monthly values of one series indexed by calendar month.
struct MonthlySeries {
    std::vector<CalendarStamp> months;
    Eigen::VectorXd values;
    std::vector<bool> observed;

    [[nodiscard]] static MonthlySeries from_panel(const Panel& panel, std::string_view node);
    /// Regressor for a quarter, or nothing when a weighted month is missing.
    [[nodiscard]] std::optional<double> regressor(const QuarterStamp& quarter, const MidasSpec& spec) const;
};

struct MidasRow {
    QuarterStamp quarter;
    double regressor = 0.0;
    double growth = 0.0;
};

struct AlignedRows {
    std::vector<MidasRow> rows;
    std::vector<std::string> warnings;
};

[[nodiscard]] AlignedRows align_midas(const MonthlySeries& monthly, const QuarterlySeries& quarterly,
                                      const MidasSpec& spec);

struct MidasFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_sd = 0.0;  // sample sd of residuals (divisor n - 1)
    int rows = 0;
};

[[nodiscard]] MidasFit fit_midas(const std::vector<MidasRow>& rows, bool intercept = true);

/// Monthly forecast distribution: observed history followed by forecast months.
/// `replicates` is B x months; history columns repeat the observed value.
struct MonthlyDistribution {
    MonthlySeries point;
    Eigen::MatrixXd replicates;
};

/// Combines a history with a point path and replicate paths (B x horizon).
[[nodiscard]] MonthlyDistribution extend_with_forecast(const MonthlySeries& history, const Eigen::VectorXd& point,
                                                       const Eigen::MatrixXd& replicates);

struct QuarterProjection {
    QuarterStamp quarter;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Maps every replicate through the bridge regression with a residual draw and
/// reports empirical (alpha/2, 1 - alpha/2) percentiles. Draws for the q-th
/// requested quarter come from stream q of `rng`.
[[nodiscard]] std::vector<QuarterProjection> project_gdp(const MidasFit& fit, const MidasSpec& spec,
                                                         const MonthlyDistribution& distribution,
                                                         const std::vector<QuarterStamp>& quarters, RngSpec rng,
                                                         double alpha = 0.05);

struct ScenarioProjection {
    std::string scenario;
    std::vector<QuarterProjection> quarters;
};

/// `quarter,scenario,point,lo95,hi95`, quarter-major.
void write_projection_csv(std::ostream& out, const std::vector<ScenarioProjection>& projections);

}  // namespace gnarx
