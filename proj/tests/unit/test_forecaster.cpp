#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gnarx/errors.hpp"
#include "gnarx/forecaster.hpp"
#include "gnarx/stochastic.hpp"
#include "oracles.hpp"

using namespace gnarx;

namespace {

ModelOrder make_order(int p, std::vector<int> s, std::vector<int> pp, AlphaMode alpha) {
    ModelOrder o;
    o.p = p;
    o.s = std::move(s);
    o.p_prime = std::move(pp);
    o.alpha = alpha;
    return o;
}

SimulatedData five_node_data(int T, std::uint64_t stream) {
    const ProcessSpec proc = five_node_process();
    return simulate(proc.order, proc.params, proc.net, T, {}, RngSpec{21, stream});
}

Panel white_noise(int n, int t, std::uint64_t stream) {
    auto engine = RngSpec{5, stream}.engine();
    return Panel::monthly(fixture::node_names(n), {2000, 1}, NoiseSpec{}.draw(n, t, engine));
}

}  // namespace

TEST(ForecastOneStep, ZeroParametersGiveZero) {
    const ProcessSpec proc = five_node_process();
    const SimulatedData sim = five_node_data(20, 1);
    const ParameterVector zero = ParameterVector::zeros(proc.order, 5);
    EXPECT_TRUE(forecast_one_step(zero, proc.net, sim.panel, sim.exogenous, 10).isZero());
}

TEST(ForecastOneStep, ScalarAutoregression) {
    const Network net = Network::undirected({"UK"}, {});
    const ModelOrder o = make_order(1, {0}, {}, AlphaMode::local);
    ParameterVector params = ParameterVector::zeros(o, 1);
    params.alpha(0, 1) = 0.9;
    Eigen::MatrixXd v(1, 2);
    v << 50.0, 0.0;
    const Panel panel = Panel::monthly({"UK"}, {2020, 1}, v);
    EXPECT_DOUBLE_EQ(forecast_one_step(params, net, panel, {}, 1)(0), 45.0);
    EXPECT_THROW((void)forecast_one_step(params, net, panel, {}, 0), DimensionError);
}

TEST(ForecastOneStep, LocalNetworkHandComputation) {
    // UK -> {DE, FR} with export weights 3 and 1; DE -> UK; FR -> DE.
    const Network net = Network::from_edges({"UK", "DE", "FR"}, {{"UK", "DE", 3.0}, {"UK", "FR", 1.0}, {"DE", "UK", 2.0}, {"FR", "DE", 5.0}});
    const ModelOrder o = make_order(1, {1}, {}, AlphaMode::local);
    ParameterVector params = ParameterVector::zeros(o, 3);
    params.alpha(0, 1) = 0.90;
    params.alpha(1, 1) = 0.80;
    params.alpha(2, 1) = 0.70;
    params.beta(1, 1) = 0.07;
    Eigen::MatrixXd v(3, 2);
    v << 52.0, 0.0, 48.0, 0.0, 55.0, 0.0;
    const Panel panel = Panel::monthly(net.nodes(), {2020, 1}, v);
    const Eigen::VectorXd f = forecast_one_step(params, net, panel, {}, 1);
    EXPECT_NEAR(f(0), 0.90 * 52.0 + 0.07 * (0.75 * 48.0 + 0.25 * 55.0), 1e-12);
    EXPECT_NEAR(f(1), 0.80 * 48.0 + 0.07 * 52.0, 1e-12);
    EXPECT_NEAR(f(2), 0.70 * 55.0 + 0.07 * 48.0, 1e-12);
}

TEST(ForecastOneStep, MissingNeighbourRenormalizes) {
    const Network net = Network::from_edges({"UK", "DE", "FR"}, {{"UK", "DE", 3.0}, {"UK", "FR", 1.0}});
    const ModelOrder o = make_order(1, {1}, {}, AlphaMode::local);
    ParameterVector params = ParameterVector::zeros(o, 3);
    params.beta(1, 1) = 0.5;
    Eigen::MatrixXd v(3, 2);
    v << 1.0, 0.0, 0.0, 0.0, 10.0, 0.0;
    MaskMatrix mask = MaskMatrix::Constant(3, 2, true);
    mask(1, 0) = false;
    const Panel panel(net.nodes(), {{2020, 1}, {2020, 2}}, v, mask);
    EXPECT_NEAR(forecast_one_step(params, net, panel, {}, 1)(0), 5.0, 1e-12);
}

TEST(RollingEvaluation, OnePointWindowEqualsOneStepForecast) {
    const ProcessSpec proc = five_node_process();
    const SimulatedData sim = five_node_data(80, 2);
    const CalendarStamp split = sim.panel.times()[79];
    const ForecastReport report = rolling_evaluation(proc.order, sim.panel, sim.exogenous, proc.net, split);
    FitOptions options;
    options.standard_errors = false;
    const FitResult fit = fit_gnarx(proc.order, sim.panel.slice_times(0, 79),
                                    {sim.exogenous[0].slice_times(0, 79)}, proc.net, options);
    const Eigen::VectorXd direct = forecast_one_step(fit.gamma_hat, proc.net, sim.panel, sim.exogenous, 79);
    ASSERT_EQ(report.records.size(), 5u);
    for (const auto& r : report.records) {
        EXPECT_NEAR(r.point, direct(r.node), 1e-12);
        EXPECT_EQ(r.date, split);
        ASSERT_TRUE(r.realized.has_value());
        EXPECT_DOUBLE_EQ(*r.realized, sim.panel.value(r.node, 79));
    }
    EXPECT_EQ(report.count, 5);
}

TEST(RollingEvaluation, WhiteNoiseMsfeIsNoiseVariance) {
    const Panel panel = white_noise(5, 1000, 3);
    const Network net = five_node_network();
    const ForecastReport report = rolling_evaluation(make_order(1, {1}, {}, AlphaMode::global), panel.select_nodes(panel.nodes()),
                                                     {}, Network(panel.nodes(), net.raw_weights(), net.adjacency()),
                                                     panel.times()[500]);
    EXPECT_EQ(report.count, 2500);
    EXPECT_NEAR(report.msfe, 1.0, 0.1);
}

TEST(RollingEvaluation, NaiveMatchesModelOnPersistentProcess) {
    const Network net = Network::undirected({"a", "b", "c"}, {{0, 1}, {1, 2}});
    const ModelOrder o = make_order(1, {0}, {}, AlphaMode::global);
    ParameterVector params = ParameterVector::zeros(o, 3);
    params.alpha(0, 1) = 0.99;
    const SimulatedData sim = simulate(o, params, net, 1200, {}, RngSpec{4, 4});
    const CalendarStamp split = sim.panel.times()[600];
    const ForecastReport model = rolling_evaluation(o, sim.panel, {}, net, split);
    const ForecastReport naive = evaluate_naive(sim.panel, split);
    EXPECT_NEAR(naive.msfe / model.msfe, 1.0, 0.05);
}

TEST(RollingEvaluation, RefitAndInSampleModes) {
    const ProcessSpec proc = five_node_process();
    const SimulatedData sim = five_node_data(120, 5);
    const CalendarStamp split = sim.panel.times()[100];
    EvaluationOptions refit;
    refit.refit = true;
    EvaluationOptions in_sample;
    in_sample.in_sample = true;
    const auto fixed = rolling_evaluation(proc.order, sim.panel, sim.exogenous, proc.net, split);
    const auto rolling = rolling_evaluation(proc.order, sim.panel, sim.exogenous, proc.net, split, refit);
    const auto whole = rolling_evaluation(proc.order, sim.panel, sim.exogenous, proc.net, split, in_sample);
    EXPECT_EQ(fixed.count, 100);
    EXPECT_EQ(rolling.count, 100);
    EXPECT_EQ(whole.count, 100);
    // The first refit forecast uses the same sample as the fixed fit.
    EXPECT_NEAR(rolling.records.front().point, fixed.records.front().point, 1e-12);
    EXPECT_NE(rolling.records.back().point, fixed.records.back().point);
    EXPECT_THROW((void)rolling_evaluation(proc.order, sim.panel, sim.exogenous, proc.net, {2100, 1}), ValidationError);
}

TEST(Summarize, PooledMeanAndStandardError) {
    ForecastReport report;
    const std::vector<double> errors{1.0, -2.0, 0.5, 3.0};
    std::vector<double> squares;
    for (std::size_t k = 0; k < errors.size(); ++k) {
        report.records.push_back({0, CalendarStamp(2020, 1).plus_months(static_cast<int>(k)), 0.0, std::nullopt,
                                  std::nullopt, errors[k]});
        squares.push_back(errors[k] * errors[k]);
    }
    report.records.push_back({1, {2020, 1}, 4.0, std::nullopt, std::nullopt, std::nullopt});
    summarize(report);
    EXPECT_EQ(report.count, 4);
    EXPECT_NEAR(report.msfe, oracle::mean(squares), 1e-15);
    EXPECT_NEAR(report.msfe_se, oracle::sample_sd(squares) / 2.0, 1e-15);
}

TEST(Comparators, NaiveOnConstantSeries) {
    const Panel panel = Panel::monthly({"a", "b"}, {2000, 1}, Eigen::MatrixXd::Constant(2, 30, 51.2));
    const ForecastReport naive = evaluate_naive(panel, {2001, 1});
    EXPECT_EQ(naive.msfe, 0.0);
    EXPECT_EQ(naive.count, 2 * 18);
}

TEST(Comparators, ArEqualsNodewiseGnarWithoutNetwork) {
    const SimulatedData sim = five_node_data(150, 6);
    const Eigen::VectorXd ar = fit_ar_baseline(sim.panel);
    const ModelOrder o = make_order(1, {0}, {}, AlphaMode::local);
    FitOptions ols;
    ols.method = EstimationMethod::ols;
    const FitResult fit = fit_gnarx(o, sim.panel, {}, five_node_network(), ols);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(ar(i), fit.gamma_hat.alpha(i, 1), 1e-12);
}

TEST(Comparators, VarCoefficientCountAndBalance) {
    auto engine = RngSpec{6, 6}.engine();
    const Panel panel = Panel::monthly(fixture::node_names(12), {2000, 1}, NoiseSpec{}.draw(12, 240, engine));
    const VarBaseline var = fit_var_baseline(panel, 2);
    EXPECT_EQ(var.num_coefficients(), 288);
    EXPECT_EQ(fit_var_baseline(panel, 2, true).num_coefficients(), 300);

    MaskMatrix mask = panel.observed();
    mask(3, 5) = false;
    const Panel unbalanced(panel.nodes(), panel.times(), panel.values(), mask);
    EXPECT_THROW((void)fit_var_baseline(unbalanced, 2), UnsupportedDataError);
    EXPECT_THROW((void)evaluate_var(unbalanced, {2010, 1}, 2), UnsupportedDataError);
}

TEST(Comparators, VarMatchesPerEquationLeastSquares) {
    const SimulatedData sim = five_node_data(60, 7);
    const VarBaseline var = fit_var_baseline(sim.panel, 1);
    const Eigen::MatrixXd& y = sim.panel.values();
    const Eigen::MatrixXd lhs = y.rightCols(59);
    const Eigen::MatrixXd rhs = y.leftCols(59);
    const Eigen::MatrixXd b = (rhs * rhs.transpose()).ldlt().solve(rhs * lhs.transpose()).transpose();
    EXPECT_LT((var.coefficients - b).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((var.predict(y, 10) - b * y.col(9)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IterateForecasts, DecayTowardZeroForStationaryModels) {
    std::mt19937_64 rng(8);
    const Network net = five_node_network();
    for (int trial = 0; trial < 100; ++trial) {
        const ModelOrder o = make_order(1, {2}, {}, AlphaMode::local);
        const ParameterLayout layout(o, 5);
        ParameterVector params(layout, oracle::random_vector(layout.size(), 0.3, rng));
        const auto report = check_stationarity(o, params);
        if (report.status != Stationarity::stationary_sufficient) params.values /= (1.0 - report.margin.minCoeff()) * 1.05;
        const Eigen::MatrixXd y = oracle::random_vector(5, 3.0, rng);
        const Eigen::MatrixXd f = iterate_forecasts(params, net, y, MaskMatrix::Constant(5, 1, true), {}, {}, 20);
        double previous = y.cwiseAbs().maxCoeff();
        for (int h = 0; h < 20; ++h) {
            const double now = f.col(h).cwiseAbs().maxCoeff();
            EXPECT_LE(now, previous + 1e-15);
            previous = now;
        }
    }
}

TEST(ForecastScenario, ZeroPathOnExogenousFreeModel) {
    const Network net = five_node_network();
    const ModelOrder o = make_order(2, {1, 0}, {}, AlphaMode::global);
    ParameterVector params = ParameterVector::zeros(o, 5);
    params.alpha(0, 1) = 0.4;
    params.alpha(0, 2) = 0.1;
    params.beta(1, 1) = 0.3;
    const SimulatedData sim = simulate(o, params, net, 40, {}, RngSpec{3, 3});
    const Eigen::MatrixXd scenario = forecast_scenario(params, net, sim.panel, {}, {}, 6);
    const Eigen::MatrixXd plain =
        iterate_forecasts(params, net, sim.panel.values(), sim.panel.observed(), {}, {}, 6);
    EXPECT_EQ(scenario, plain);
}

TEST(ForecastScenario, AffineInExogenousPath) {
    std::mt19937_64 rng(9);
    const ProcessSpec proc = five_node_process();
    const SimulatedData sim = five_node_data(50, 9);
    const int h = 6;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd p1 = oracle::random_vector(5 * h, 1.0, rng).reshaped(5, h);
        const Eigen::MatrixXd p2 = oracle::random_vector(5 * h, 1.0, rng).reshaped(5, h);
        std::uniform_real_distribution<double> coef(-2.0, 2.0);
        const double a = coef(rng);
        const double b = coef(rng);
        const auto f = [&](const Eigen::MatrixXd& path) {
            return forecast_scenario(proc.params, proc.net, sim.panel, sim.exogenous, {path}, h);
        };
        const Eigen::MatrixXd lhs = f(a * p1 + b * p2);
        const Eigen::MatrixXd rhs = a * f(p1) + b * f(p2) - (a + b - 1.0) * f(Eigen::MatrixXd::Zero(5, h));
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_THROW((void)forecast_scenario(proc.params, proc.net, sim.panel, sim.exogenous, {Eigen::MatrixXd::Zero(5, 3)}, h),
                 ValidationError);
}

TEST(Scenario, LinearPaths) {
    const auto easing = linear_path(67.9, 0.0, 6);
    ASSERT_EQ(easing.size(), 6u);
    EXPECT_NEAR(easing[0], 67.9 * 5.0 / 6.0, 1e-12);
    EXPECT_DOUBLE_EQ(easing[5], 0.0);
    const auto tightening = linear_path(67.9, 100.0, 6);
    EXPECT_DOUBLE_EQ(tightening[5], 100.0);
    for (double v : linear_path(67.9, 67.9, 6)) EXPECT_DOUBLE_EQ(v, 67.9);
}

TEST(Scenario, FutureRegressorDifferencesAndHolds) {
    Eigen::MatrixXd levels(2, 3);
    levels << 10, 20, 67.9, 5, 5, 7;
    const Panel panel = Panel::monthly({"UK", "US"}, {2020, 8}, levels);
    ScenarioPath scenario{"easing", {{"stringency", {{"UK", linear_path(67.9, 0.0, 3)}}}}};
    const Eigen::MatrixXd raw = future_regressor(scenario, "stringency", panel, {}, 3);
    EXPECT_NEAR(raw(0, 0), 67.9 * 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(raw(1, 2), 7.0);
    const Eigen::MatrixXd diff = future_regressor(scenario, "stringency", panel, {true, {}}, 3);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(diff(0, k), -67.9 / 3.0, 1e-12);
        EXPECT_DOUBLE_EQ(diff(1, k), 0.0);
    }
    const Eigen::MatrixXd scaled = future_regressor(scenario, "stringency", panel, {true, {{0.0, 2.0}, {1.0, 4.0}}}, 3);
    EXPECT_NEAR(scaled(0, 0), -67.9 / 6.0, 1e-12);
    EXPECT_NEAR(scaled(1, 0), -0.25, 1e-12);
    EXPECT_THROW((void)future_regressor(scenario, "stringency", panel, {}, 4), ValidationError);
}

TEST(Scenario, JsonRoundTrip) {
    std::istringstream in(R"({"label":"easing","paths":{"stringency":{"UK":[1.5,2.5]}}})");
    const ScenarioPath s = read_scenario_json(in);
    EXPECT_EQ(s.label, "easing");
    EXPECT_EQ(s.paths.at("stringency").at("UK"), (std::vector<double>{1.5, 2.5}));
    std::ostringstream out;
    write_scenario_json(out, s);
    std::istringstream again(out.str());
    EXPECT_EQ(read_scenario_json(again).paths, s.paths);
    std::istringstream unequal(R"({"label":"x","paths":{"s":{"a":[1],"b":[1,2]}}})");
    EXPECT_THROW((void)read_scenario_json(unequal), ValidationError);
}

TEST(ForecastCsv, HeaderAndEmptyIntervals) {
    ForecastReport report;
    report.records.push_back({1, {2020, 11}, 50.25, std::nullopt, std::nullopt, std::nullopt});
    report.records.push_back({0, {2020, 11}, 49.0, 47.0, 51.0, 48.5});
    std::ostringstream out;
    write_forecast_csv(out, report, {"UK", "US"});
    EXPECT_EQ(out.str(), "node,date,point,lo95,hi95,realized\nUS,2020-11,50.25,,,\nUK,2020-11,49,47,51,48.5\n");
}
