#include <benchmark/benchmark.h>

#include "gnarx/estimator.hpp"
#include "gnarx/selector.hpp"
#include "gnarx/stochastic.hpp"

namespace {

gnarx::SimulatedData five_node_data(int T) {
    const auto process = gnarx::five_node_process();
    return gnarx::simulate(process.order, process.params, process.net, T, {}, gnarx::RngSpec{42, 0});
}

void BM_FitFgls(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    const auto data = five_node_data(static_cast<int>(state.range(0)));
    const gnarx::FitOptions options{gnarx::EstimationMethod::fgls, std::nullopt, false};
    for (auto _ : state) {
        auto fit = gnarx::fit_gnarx(process.order, data.panel, data.exogenous, process.net, options);
        benchmark::DoNotOptimize(fit.gamma_hat.values.data());
    }
}
BENCHMARK(BM_FitFgls)->Arg(128)->Arg(512)->Arg(2048);

void BM_FitWithStandardErrors(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    const auto data = five_node_data(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto fit = gnarx::fit_gnarx(process.order, data.panel, data.exogenous, process.net);
        benchmark::DoNotOptimize(fit.se_hc2.data());
    }
}
BENCHMARK(BM_FitWithStandardErrors)->Arg(128)->Arg(512);

void BM_GlobalSearch(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    const auto data = five_node_data(128);
    const gnarx::SearchSpace space{3, 3, 3, gnarx::AlphaMode::local};
    for (auto _ : state) {
        auto trace = gnarx::select_global(space, data.panel, data.exogenous, process.net);
        benchmark::DoNotOptimize(trace.visited.data());
    }
}
BENCHMARK(BM_GlobalSearch)->Unit(benchmark::kMillisecond);

void BM_StagewiseSearch(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    const auto data = five_node_data(128);
    const gnarx::SearchSpace space{12, 3, 3, gnarx::AlphaMode::local};
    for (auto _ : state) {
        auto trace = gnarx::select_stagewise(space, data.panel, data.exogenous, process.net);
        benchmark::DoNotOptimize(trace.visited.data());
    }
}
BENCHMARK(BM_StagewiseSearch)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    const auto data = five_node_data(128);
    gnarx::BootstrapOptions options;
    options.replicates = static_cast<int>(state.range(0));
    options.horizon = 6;
    const std::vector<Eigen::MatrixXd> future{Eigen::MatrixXd::Zero(5, 6)};
    for (auto _ : state) {
        auto report = gnarx::bootstrap_intervals(process.order, data.panel, data.exogenous, process.net, future, options,
                                                 gnarx::RngSpec{7, 0});
        benchmark::DoNotOptimize(report.lower.data());
    }
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const auto process = gnarx::five_node_process();
    std::uint64_t stream = 0;
    for (auto _ : state) {
        auto sim = gnarx::simulate(process.order, process.params, process.net, static_cast<int>(state.range(0)), {},
                                   gnarx::RngSpec{1, stream++});
        benchmark::DoNotOptimize(sim.panel.values().data());
    }
}
BENCHMARK(BM_Simulate)->Arg(512)->Arg(4096);

}  // namespace
BENCHMARK_MAIN();
