#include "gnarx/forecaster.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gnarx/errors.hpp"

namespace gnarx {

namespace {

std::vector<Eigen::MatrixXd> values_of(const std::vector<Panel>& panels) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(panels.size());
    for (const auto& p : panels) out.push_back(p.values());
    return out;
}

std::vector<MaskMatrix> masks_of(const std::vector<Panel>& panels) {
    std::vector<MaskMatrix> out;
    out.reserve(panels.size());
    for (const auto& p : panels) out.push_back(p.observed());
    return out;
}

std::vector<Panel> slice_all(const std::vector<Panel>& panels, int first, int count) {
    std::vector<Panel> out;
    out.reserve(panels.size());
    for (const auto& p : panels) out.push_back(p.slice_times(first, count));
    return out;
}

void require_balanced(const Panel& panel, const char* what) {
    if (!panel.fully_observed()) {
        throw UnsupportedDataError(std::string(what) + " requires a balanced panel without missing values");
    }
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

Eigen::MatrixXd iterate_forecasts(const ParameterVector& params, const Network& net, const Eigen::MatrixXd& y,
                                  const MaskMatrix& y_observed, const std::vector<Eigen::MatrixXd>& x,
                                  const std::vector<MaskMatrix>& x_observed, int horizon,
                                  const Eigen::MatrixXd* innovations) {
    const auto& order = params.layout.order();
    const auto n = y.rows();
    const auto t0 = y.cols();
    if (horizon < 1) throw ValidationError("forecast horizon must be >= 1");
    if (t0 < order.max_lag()) throw DimensionError("insufficient history for forecasting");
    if (static_cast<int>(x.size()) != order.num_exogenous() || x_observed.size() != x.size()) {
        throw DimensionError("exogenous regressor count does not match the model order");
    }
    for (std::size_t h = 0; h < x.size(); ++h) {
        if (x[h].rows() != n || x[h].cols() < t0 + horizon || x_observed[h].cols() < t0 + horizon) {
            throw DimensionError("exogenous values do not cover the forecast horizon");
        }
    }
    if (innovations != nullptr && (innovations->rows() != n || innovations->cols() < horizon)) {
        throw DimensionError("innovations do not cover the forecast horizon");
    }

    Eigen::MatrixXd ext(n, t0 + horizon);
    ext.leftCols(t0) = y;
    ext.rightCols(horizon).setZero();
    MaskMatrix ext_obs(n, t0 + horizon);
    ext_obs.leftCols(t0) = y_observed;
    ext_obs.rightCols(horizon).setConstant(true);

    const DesignBuilder builder(order, net);
    Eigen::MatrixXd out(n, horizon);
    for (int c = 0; c < horizon; ++c) {
        const auto t = static_cast<int>(t0) + c;
        Eigen::VectorXd next = builder.block(ext, ext_obs, x, x_observed, t) * params.values;
        if (innovations != nullptr) next += innovations->col(c);
        ext.col(t) = next;
        out.col(c) = next;
    }
    return out;
}

Eigen::VectorXd forecast_one_step(const ParameterVector& params, const Network& net, const Panel& panel,
                                  const std::vector<Panel>& exogenous, int target) {
    const auto& order = params.layout.order();
    if (target < order.max_lag()) throw DimensionError("insufficient history for a one-step forecast");
    if (target >= panel.num_times()) throw DimensionError("forecast target lies beyond the panel");
    if (static_cast<int>(exogenous.size()) != order.num_exogenous()) {
        throw DimensionError("exogenous regressor count does not match the model order");
    }
    check_aligned(panel, exogenous);
    const DesignBuilder builder(order, net);
    return builder.block(panel.values(), panel.observed(), values_of(exogenous), masks_of(exogenous), target) *
           params.values;
}

ScenarioPath read_scenario_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("paths") || !j["paths"].is_object()) {
        throw FormatError("scenario JSON needs an object field \"paths\"");
    }
    ScenarioPath scenario;
    scenario.label = j.value("label", std::string("scenario"));
    for (const auto& [name, nodes] : j["paths"].items()) {
        if (!nodes.is_object()) throw FormatError("scenario paths for '" + name + "' must map nodes to arrays");
        std::optional<std::size_t> length;
        for (const auto& [node, values] : nodes.items()) {
            if (!values.is_array()) throw FormatError("scenario path " + name + "/" + node + " is not an array");
            std::vector<double> path;
            for (const auto& v : values) {
                if (!v.is_number() || !std::isfinite(v.get<double>())) {
                    throw ValidationError("scenario path " + name + "/" + node + " has a non-finite value");
                }
                path.push_back(v.get<double>());
            }
            if (length && *length != path.size()) {
                throw ValidationError("scenario paths for '" + name + "' have unequal lengths");
            }
            length = path.size();
            scenario.paths[name][node] = std::move(path);
        }
    }
    return scenario;
}

ScenarioPath load_scenario_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file " + path.string());
    return read_scenario_json(in);
}

void write_scenario_json(std::ostream& out, const ScenarioPath& scenario) {
    nlohmann::json j{{"label", scenario.label}, {"paths", scenario.paths}};
    out << j.dump(2) << '\n';
}

std::vector<double> linear_path(double start, double end, int horizon) {
    if (horizon < 1) throw ValidationError("path horizon must be >= 1");
    std::vector<double> path(static_cast<std::size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
        path[static_cast<std::size_t>(k - 1)] = start + (end - start) * static_cast<double>(k) / horizon;
    }
    return path;
}

Eigen::MatrixXd future_regressor(const ScenarioPath& scenario, const std::string& name, const Panel& levels,
                                 const RegressorTransform& transform, int horizon) {
    const int n = levels.num_nodes();
    if (horizon < 1) throw ValidationError("forecast horizon must be >= 1");
    if (!transform.scales.empty() && static_cast<int>(transform.scales.size()) != n) {
        throw DimensionError("regressor scales do not match the node count");
    }
    const auto found = scenario.paths.find(name);
    if (found != scenario.paths.end()) {
        for (const auto& [node, path] : found->second) {
            (void)levels.node_index(node);
            if (static_cast<int>(path.size()) < horizon) {
                throw ValidationError("scenario '" + scenario.label + "' path " + name + "/" + node +
                                      " is shorter than the horizon");
            }
        }
    }

    Eigen::MatrixXd out(n, horizon);
    for (int i = 0; i < n; ++i) {
        int last = levels.num_times() - 1;
        while (last >= 0 && !levels.is_observed(i, last)) --last;
        if (last < 0) throw ValidationError("regressor " + name + " has no observed level for " + levels.nodes()[i]);
        const double anchor = levels.value(i, last);

        Eigen::VectorXd path = Eigen::VectorXd::Constant(horizon, anchor);
        if (found != scenario.paths.end()) {
            const auto node_path = found->second.find(levels.nodes()[static_cast<std::size_t>(i)]);
            if (node_path != found->second.end()) {
                for (int k = 0; k < horizon; ++k) path(k) = node_path->second[static_cast<std::size_t>(k)];
            }
        }
        if (transform.difference) {
            double previous = anchor;
            for (int k = 0; k < horizon; ++k) {
                const double level = path(k);
                path(k) = level - previous;
                previous = level;
            }
        }
        if (!transform.scales.empty()) {
            const auto& s = transform.scales[static_cast<std::size_t>(i)];
            path = (path.array() - s.mean) / s.sd;
        }
        out.row(i) = path.transpose();
    }
    return out;
}

Eigen::MatrixXd forecast_scenario(const ParameterVector& params, const Network& net, const Panel& panel,
                                  const std::vector<Panel>& exogenous, const std::vector<Eigen::MatrixXd>& future,
                                  int horizon) {
    if (future.size() != exogenous.size()) throw DimensionError("future paths must be given for every regressor");
    check_aligned(panel, exogenous);
    const int n = panel.num_nodes();
    const int t0 = panel.num_times();
    std::vector<Eigen::MatrixXd> x;
    std::vector<MaskMatrix> x_obs;
    for (std::size_t h = 0; h < exogenous.size(); ++h) {
        if (future[h].rows() != n || future[h].cols() < horizon) {
            throw ValidationError("scenario is shorter than the forecast horizon");
        }
        Eigen::MatrixXd values(n, t0 + horizon);
        values << exogenous[h].values(), future[h].leftCols(horizon);
        MaskMatrix mask(n, t0 + horizon);
        mask << exogenous[h].observed(), MaskMatrix::Constant(n, horizon, true);
        x.push_back(std::move(values));
        x_obs.push_back(std::move(mask));
    }
    return iterate_forecasts(params, net, panel.values(), panel.observed(), x, x_obs, horizon);
}

void summarize(ForecastReport& report) {
    std::vector<double> squared;
    for (const auto& r : report.records) {
        if (r.realized) squared.push_back((*r.realized - r.point) * (*r.realized - r.point));
    }
    report.count = static_cast<int>(squared.size());
    if (squared.empty()) {
        report.msfe = 0.0;
        report.msfe_se = 0.0;
        return;
    }
    const Eigen::Map<const Eigen::VectorXd> e(squared.data(), static_cast<Eigen::Index>(squared.size()));
    report.msfe = e.mean();
    report.msfe_se = squared.size() > 1
                         ? std::sqrt((e.array() - report.msfe).square().sum() / static_cast<double>(e.size() - 1) /
                                     static_cast<double>(e.size()))
                         : 0.0;
}

void write_forecast_csv(std::ostream& out, const ForecastReport& report, const std::vector<std::string>& nodes) {
    out << "node,date,point,lo95,hi95,realized\n";
    for (const auto& r : report.records) {
        out << nodes.at(static_cast<std::size_t>(r.node)) << ',' << r.date.to_string() << ',' << format_double(r.point)
            << ',' << cell(r.lower) << ',' << cell(r.upper) << ',' << cell(r.realized) << '\n';
    }
}

void save_forecast_csv(const std::filesystem::path& path, const ForecastReport& report,
                       const std::vector<std::string>& nodes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_forecast_csv(out, report, nodes);
}

int split_column(const Panel& panel, const CalendarStamp& split) {
    const auto column = panel.time_index(split);
    if (!column || *column <= 0) {
        throw ValidationError("split " + split.to_string() + " lies outside the panel range");
    }
    return *column;
}

ForecastReport evaluate_fixed(const ParameterVector& params, const Network& net, const Panel& panel,
                              const std::vector<Panel>& exogenous, int first, int last) {
    if (first >= last) throw ValidationError("empty evaluation window");
    if (static_cast<int>(exogenous.size()) != params.layout.order().num_exogenous()) {
        throw DimensionError("exogenous regressor count does not match the model order");
    }
    check_aligned(panel, exogenous);
    const DesignBuilder builder(params.layout.order(), net);
    const auto x = values_of(exogenous);
    const auto x_obs = masks_of(exogenous);
    ForecastReport report;
    report.model = params.layout.order().to_string();
    for (int t = first; t < last; ++t) {
        const Eigen::VectorXd point = builder.block(panel.values(), panel.observed(), x, x_obs, t) * params.values;
        for (int i = 0; i < panel.num_nodes(); ++i) {
            ForecastRecord r;
            r.node = i;
            r.date = panel.times()[static_cast<std::size_t>(t)];
            r.point = point(i);
            if (panel.is_observed(i, t)) r.realized = panel.value(i, t);
            report.records.push_back(r);
        }
    }
    summarize(report);
    return report;
}

ForecastReport rolling_evaluation(const ModelOrder& order, const Panel& panel, const std::vector<Panel>& exogenous,
                                  const Network& net, const CalendarStamp& split, const EvaluationOptions& options) {
    const int first = split_column(panel, split);
    const int last = panel.num_times();
    if (options.in_sample) {
        const FitResult fit = fit_gnarx(order, panel, exogenous, net, options.fit);
        return evaluate_fixed(fit.gamma_hat, net, panel, exogenous, first, last);
    }
    if (!options.refit) {
        const FitResult fit =
            fit_gnarx(order, panel.slice_times(0, first), slice_all(exogenous, 0, first), net, options.fit);
        return evaluate_fixed(fit.gamma_hat, net, panel, exogenous, first, last);
    }
    ForecastReport report;
    report.model = order.to_string();
    for (int t = first; t < last; ++t) {
        const FitResult fit = fit_gnarx(order, panel.slice_times(0, t), slice_all(exogenous, 0, t), net, options.fit);
        ForecastReport step = evaluate_fixed(fit.gamma_hat, net, panel, exogenous, t, t + 1);
        report.records.insert(report.records.end(), step.records.begin(), step.records.end());
    }
    summarize(report);
    return report;
}

Eigen::VectorXd VarBaseline::predict(const Eigen::MatrixXd& y, int target) const {
    if (target < p || target > y.cols()) throw DimensionError("insufficient history for the VAR forecast");
    Eigen::VectorXd out = constant;
    const auto n = y.rows();
    for (int k = 1; k <= p; ++k) out.noalias() += coefficients.middleCols((k - 1) * n, n) * y.col(target - k);
    return out;
}

VarBaseline fit_var_baseline(const Panel& panel, int p, bool intercept) {
    if (p < 1) throw ValidationError("VAR order must be >= 1");
    require_balanced(panel, "the VAR comparator");
    const int n = panel.num_nodes();
    const int rows = panel.num_times() - p;
    const int k = n * p + (intercept ? 1 : 0);
    if (rows <= k) throw SingularityError("VAR(" + std::to_string(p) + ") has more coefficients than observations");

    Eigen::MatrixXd x(rows, k);
    Eigen::MatrixXd targets(rows, n);
    const auto& y = panel.values();
    for (int r = 0; r < rows; ++r) {
        const int t = p + r;
        for (int lag = 1; lag <= p; ++lag) x.block(r, (lag - 1) * n, 1, n) = y.col(t - lag).transpose();
        if (intercept) x(r, k - 1) = 1.0;
        targets.row(r) = y.col(t).transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < k) throw SingularityError("VAR design matrix is rank deficient");
    const Eigen::MatrixXd b = qr.solve(targets);  // k x n

    VarBaseline model;
    model.p = p;
    model.intercept = intercept;
    model.coefficients = b.topRows(n * p).transpose();
    model.constant = intercept ? Eigen::VectorXd(b.row(k - 1).transpose()) : Eigen::VectorXd::Zero(n);
    return model;
}

Eigen::VectorXd fit_ar_baseline(const Panel& panel) {
    Eigen::VectorXd out(panel.num_nodes());
    for (int i = 0; i < panel.num_nodes(); ++i) {
        double num = 0.0;
        double den = 0.0;
        for (int t = 1; t < panel.num_times(); ++t) {
            if (!panel.is_observed(i, t) || !panel.is_observed(i, t - 1)) continue;
            num += panel.value(i, t) * panel.value(i, t - 1);
            den += panel.value(i, t - 1) * panel.value(i, t - 1);
        }
        if (den == 0.0) throw SingularityError("AR(1) comparator has no usable observations for " + panel.nodes()[i]);
        out(i) = num / den;
    }
    return out;
}

ForecastReport evaluate_var(const Panel& panel, const CalendarStamp& split, int p, bool intercept) {
    require_balanced(panel, "the VAR comparator");
    const int first = split_column(panel, split);
    const VarBaseline model = fit_var_baseline(panel.slice_times(0, first), p, intercept);
    ForecastReport report;
    report.model = "VAR(" + std::to_string(p) + ")";
    for (int t = first; t < panel.num_times(); ++t) {
        const Eigen::VectorXd point = model.predict(panel.values(), t);
        for (int i = 0; i < panel.num_nodes(); ++i) {
            report.records.push_back({i, panel.times()[static_cast<std::size_t>(t)], point(i), std::nullopt,
                                      std::nullopt, panel.value(i, t)});
        }
    }
    summarize(report);
    return report;
}

ForecastReport evaluate_ar(const Panel& panel, const CalendarStamp& split) {
    const int first = split_column(panel, split);
    const Eigen::VectorXd a = fit_ar_baseline(panel.slice_times(0, first));
    ForecastReport report;
    report.model = "AR(1)";
    for (int t = first; t < panel.num_times(); ++t) {
        for (int i = 0; i < panel.num_nodes(); ++i) {
            ForecastRecord r;
            r.node = i;
            r.date = panel.times()[static_cast<std::size_t>(t)];
            r.point = panel.is_observed(i, t - 1) ? a(i) * panel.value(i, t - 1) : 0.0;
            if (panel.is_observed(i, t)) r.realized = panel.value(i, t);
            report.records.push_back(r);
        }
    }
    summarize(report);
    return report;
}

ForecastReport evaluate_naive(const Panel& panel, const CalendarStamp& split) {
    const int first = split_column(panel, split);
    ForecastReport report;
    report.model = "naive";
    for (int t = first; t < panel.num_times(); ++t) {
        for (int i = 0; i < panel.num_nodes(); ++i) {
            int prev = t - 1;
            while (prev >= 0 && !panel.is_observed(i, prev)) --prev;
            if (prev < 0) continue;
            ForecastRecord r;
            r.node = i;
            r.date = panel.times()[static_cast<std::size_t>(t)];
            r.point = panel.value(i, prev);
            if (panel.is_observed(i, t)) r.realized = panel.value(i, t);
            report.records.push_back(r);
        }
    }
    summarize(report);
    return report;
}

}  // namespace gnarx
