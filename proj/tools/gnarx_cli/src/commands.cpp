#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "gnarx/errors.hpp"
#include "gnarx/parallel.hpp"
#include "gnarx/stochastic.hpp"

namespace gnarx::cli {

namespace {

constexpr int kFormatVersion = 1;
constexpr std::uint64_t kMidasSeedSalt = 0x9E3779B97F4A7C15ull;

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string slug(const std::string& label) {
    std::string out;
    for (const char ch : label) {
        const bool keep = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                          ch == '-' || ch == '_';
        out += keep ? ch : '_';
    }
    return out.empty() ? "scenario" : out;
}

SelectionTrace run_search(const SearchConfig& search, const LoadedData& data, int threads) {
    const SearchOptions options{threads, search.stage_one};
    if (search.method == "global") return select_global(search.space, data.panel, data.exogenous, data.network, options);
    if (search.method == "msfe") {
        return select_by_msfe(search.space, data.panel, data.exogenous, data.network, search.fit_months,
                              search.eval_months, options);
    }
    return select_stagewise(search.space, data.panel, data.exogenous, data.network, options);
}

// The configured order, or the winner of the configured search on `data`.
ModelOrder resolve_order(CommandContext& ctx, const LoadedData& data) {
    const auto& config = ctx.config;
    if (config.order) return *config.order;
    if (!config.search) throw ConfigError("order: required (or give a search block)");
    const SelectionTrace trace = run_search(*config.search, data, ctx.threads);
    ctx.log << "selected order " << trace.winner.to_string() << '\n';
    return trace.winner;
}

FitOptions fit_options(const RunConfig& config, bool standard_errors) {
    return {config.estimation, std::nullopt, standard_errors};
}

struct NamedScenario {
    std::string label;
    ScenarioPath path;
};

std::vector<NamedScenario> scenarios_of(const RunConfig& config, const LoadedData& data) {
    std::vector<NamedScenario> out;
    for (const auto& file : config.scenarios) {
        ScenarioPath s = load_scenario_json(file);
        for (const auto& [name, nodes] : s.paths) {
            if (std::find(data.regressor_names.begin(), data.regressor_names.end(), name) ==
                data.regressor_names.end()) {
                throw ConfigError("scenarios: '" + s.label + "' names unknown regressor '" + name + "'");
            }
        }
        out.push_back({slug(s.label), std::move(s)});
    }
    if (out.empty()) {
        if (!data.exogenous.empty()) throw ConfigError("scenarios: required when regressors are configured");
        out.push_back({"baseline", ScenarioPath{"baseline", {}}});
    }
    return out;
}

std::vector<Eigen::MatrixXd> future_of(const ScenarioPath& scenario, const LoadedData& data, int horizon) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t h = 0; h < data.exogenous.size(); ++h) {
        out.push_back(future_regressor(scenario, data.regressor_names[h], data.exogenous_levels[h],
                                       data.transforms[h], horizon));
    }
    return out;
}

double to_level(const LoadedData& data, int node, double value) {
    if (data.panel_scales.empty()) return value;
    const auto& s = data.panel_scales[static_cast<std::size_t>(node)];
    return value * s.sd + s.mean;
}

ForecastReport path_report(const LoadedData& data, const std::string& label, const Eigen::MatrixXd& point,
                           const Eigen::MatrixXd* lower, const Eigen::MatrixXd* upper) {
    ForecastReport report;
    report.model = label;
    const CalendarStamp origin = data.panel.times().back();
    for (int i = 0; i < point.rows(); ++i) {
        for (int k = 0; k < point.cols(); ++k) {
            ForecastRecord r;
            r.node = i;
            r.date = origin.plus_months(k + 1);
            r.point = to_level(data, i, point(i, k));
            if (lower != nullptr) r.lower = to_level(data, i, (*lower)(i, k));
            if (upper != nullptr) r.upper = to_level(data, i, (*upper)(i, k));
            report.records.push_back(r);
        }
    }
    return report;
}

BootstrapOptions bootstrap_options(const CommandContext& ctx) {
    BootstrapOptions options;
    options.replicates = ctx.config.replicates;
    options.alpha = ctx.config.alpha;
    options.horizon = ctx.config.horizon;
    options.fit = fit_options(ctx.config, false);
    options.threads = ctx.threads;
    return options;
}

}  // namespace

fs::path CommandContext::output(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
}

void cmd_select(CommandContext& ctx) {
    if (!ctx.config.search) throw ConfigError("search: required for select");
    const LoadedData data = in_sample(load_data(ctx.config), ctx.config.split);
    const SelectionTrace trace = run_search(*ctx.config.search, data, ctx.threads);
    save_trace_csv(ctx.output("selection_trace.csv"), trace);

    const auto winner = std::find_if(trace.visited.begin(), trace.visited.end(), [&](const Candidate& c) {
        return c.order == trace.winner && (ctx.config.search->method != "stagewise" || c.stage == 2);
    });
    nlohmann::json j{{"method", ctx.config.search->method},
                     {"order", trace.winner},
                     {"bic", winner->bic},
                     {"first_target", trace.first_target},
                     {"candidates", trace.visited.size()}};
    if (winner->msfe) j["msfe"] = *winner->msfe;
    write_json(ctx.output("order.json"), j);
    ctx.log << "selected order " << trace.winner.to_string() << '\n';
}

void cmd_fit(CommandContext& ctx) {
    const LoadedData data = in_sample(load_data(ctx.config), ctx.config.split);
    const ModelOrder order = resolve_order(ctx, data);
    const FitResult fit = fit_gnarx(order, data.panel, data.exogenous, data.network, fit_options(ctx.config, true));

    nlohmann::json j = fit_to_json(fit);
    const StationarityReport st = check_stationarity(order, fit.gamma_hat);
    j["stationarity"] = {
        {"status", st.status == Stationarity::stationary_sufficient ? "stationary_sufficient" : "not_guaranteed"},
        {"margin", std::vector<double>(st.margin.data(), st.margin.data() + st.margin.size())}};
    j["bic"] = bic(fit);
    write_json(ctx.output("fit.json"), j);

    const auto first = static_cast<std::size_t>(fit.first_target);
    const std::vector<CalendarStamp> times(data.panel.times().begin() + static_cast<std::ptrdiff_t>(first),
                                           data.panel.times().end());
    save_panel_csv(ctx.output("residuals.csv"), Panel(data.panel.nodes(), times, fit.residuals, fit.residual_observed));
    for (const auto& w : fit.warnings) ctx.log << "warning: " << w << '\n';
    ctx.log << "fitted " << order.to_string() << " on " << fit.effective_T << " months\n";
}

void cmd_evaluate(CommandContext& ctx) {
    const auto& config = ctx.config;
    if (!config.split) throw ConfigError("split: required for evaluate");
    const LoadedData data = load_data(config);
    const ModelOrder order = resolve_order(ctx, in_sample(data, config.split));

    EvaluationOptions options;
    options.fit = fit_options(config, false);
    options.refit = config.evaluation.refit;
    options.in_sample = config.evaluation.in_sample;

    std::vector<std::pair<std::string, ForecastReport>> reports;
    reports.emplace_back("gnarx", rolling_evaluation(order, data.panel, data.exogenous, data.network, *config.split,
                                                     options));
    reports.front().second.model = "GNARX" + order.to_string();
    for (const auto& name : config.evaluation.comparators) {
        if (name == "var") {
            reports.emplace_back("var", evaluate_var(data.panel, *config.split, config.evaluation.var_p,
                                                     config.evaluation.var_intercept));
        } else if (name == "ar") {
            reports.emplace_back("ar", evaluate_ar(data.panel, *config.split));
        } else {
            reports.emplace_back("naive", evaluate_naive(data.panel, *config.split));
        }
    }

    std::ofstream table(ctx.output("evaluation.csv"));
    table << "model,msfe,se,count\n";
    for (const auto& [key, report] : reports) {
        table << '"' << report.model << "\"," << format_double(report.msfe) << ',' << format_double(report.msfe_se)
              << ',' << report.count << '\n';
        save_forecast_csv(ctx.output("forecasts_" + key + ".csv"), report, data.panel.nodes());
        ctx.log << report.model << ": MSFE " << format_double(report.msfe) << " (" << format_double(report.msfe_se)
                << ")\n";
    }
}

void cmd_forecast(CommandContext& ctx) {
    const LoadedData data = load_data(ctx.config);
    const ModelOrder order = resolve_order(ctx, data);
    const FitResult fit = fit_gnarx(order, data.panel, data.exogenous, data.network, fit_options(ctx.config, false));
    for (const auto& [label, scenario] : scenarios_of(ctx.config, data)) {
        const Eigen::MatrixXd point = forecast_scenario(fit.gamma_hat, data.network, data.panel, data.exogenous,
                                                        future_of(scenario, data, ctx.config.horizon),
                                                        ctx.config.horizon);
        save_forecast_csv(ctx.output("forecast_" + label + ".csv"), path_report(data, label, point, nullptr, nullptr),
                          data.panel.nodes());
    }
    ctx.log << "forecast " << ctx.config.horizon << " months with " << order.to_string() << '\n';
}

void cmd_bootstrap(CommandContext& ctx) {
    const LoadedData data = load_data(ctx.config);
    const ModelOrder order = resolve_order(ctx, data);
    const BootstrapOptions options = bootstrap_options(ctx);
    for (const auto& [label, scenario] : scenarios_of(ctx.config, data)) {
        const IntervalReport report =
            bootstrap_intervals(order, data.panel, data.exogenous, data.network,
                                future_of(scenario, data, ctx.config.horizon), options, RngSpec{ctx.config.seed, 0});
        save_forecast_csv(ctx.output("intervals_" + label + ".csv"),
                          path_report(data, label, report.point, &report.lower, &report.upper), data.panel.nodes());
        if (report.dropped > 0) ctx.log << label << ": dropped " << report.dropped << " singular replicates\n";
    }
    ctx.log << "bootstrap intervals from " << options.replicates << " replicates\n";
}

void cmd_midas(CommandContext& ctx) {
    if (!ctx.config.midas) throw ConfigError("midas: required for the midas command");
    const MidasConfig& mc = *ctx.config.midas;
    const LoadedData data = load_data(ctx.config);
    const int node = data.panel.node_index(mc.node);
    const MonthlySeries history = MonthlySeries::from_panel(to_levels(data, data.panel), mc.node);

    const QuarterlySeries quarterly = load_quarterly_csv(mc.quarterly);
    const AlignedRows aligned = align_midas(history, quarterly, mc.spec);
    for (const auto& w : aligned.warnings) ctx.log << "warning: " << w << '\n';
    const MidasFit bridge = fit_midas(aligned.rows, mc.spec.intercept);
    write_json(ctx.output("midas_fit.json"), {{"slope", bridge.slope},
                                              {"intercept", bridge.intercept},
                                              {"residual_sd", bridge.residual_sd},
                                              {"rows", bridge.rows},
                                              {"warnings", aligned.warnings}});

    const ModelOrder order = resolve_order(ctx, data);
    const BootstrapOptions options = bootstrap_options(ctx);
    std::vector<ScenarioProjection> projections;
    std::vector<QuarterStamp> quarters = mc.quarters;
    for (const auto& [label, scenario] : scenarios_of(ctx.config, data)) {
        const IntervalReport report =
            bootstrap_intervals(order, data.panel, data.exogenous, data.network,
                                future_of(scenario, data, ctx.config.horizon), options, RngSpec{ctx.config.seed, 0});
        Eigen::VectorXd point(report.point.cols());
        for (Eigen::Index k = 0; k < point.size(); ++k) point(k) = to_level(data, node, report.point(node, k));
        Eigen::MatrixXd replicates(static_cast<Eigen::Index>(report.paths.size()), report.point.cols());
        for (std::size_t b = 0; b < report.paths.size(); ++b) {
            for (Eigen::Index k = 0; k < point.size(); ++k) {
                replicates(static_cast<Eigen::Index>(b), k) = to_level(data, node, report.paths[b](node, k));
            }
        }
        const MonthlyDistribution distribution = extend_with_forecast(history, point, replicates);
        if (quarters.empty()) {
            // Quarters after the last observed growth value that the forecast covers.
            QuarterStamp q = quarterly.quarters.back().next();
            for (std::size_t i = quarterly.quarters.size(); i-- > 0;) {
                if (quarterly.observed[i]) {
                    q = quarterly.quarters[i].next();
                    break;
                }
            }
            while (distribution.point.regressor(q, mc.spec)) {
                quarters.push_back(q);
                q = q.next();
            }
            if (quarters.empty()) throw ConfigError("midas.quarters: the forecast covers no new quarter");
        }
        projections.push_back({label, project_gdp(bridge, mc.spec, distribution, quarters,
                                                  RngSpec{ctx.config.seed ^ kMidasSeedSalt, 0}, ctx.config.alpha)});
    }
    std::ofstream out(ctx.output("midas.csv"));
    write_projection_csv(out, projections);
    ctx.log << "bridge slope " << format_double(bridge.slope) << " on " << bridge.rows << " quarters\n";
}

void cmd_simstudy(CommandContext& ctx) {
    const SimstudyConfig& st = ctx.config.simstudy;
    const ProcessSpec process = five_node_process();
    std::ofstream counts(ctx.output("simstudy.csv"));
    std::ofstream summary(ctx.output("simstudy_summary.csv"));
    counts << "method,T,order,count\n";
    summary << "method,T,replicates,true_order_rate\n";

    for (const int length : st.lengths) {
        std::vector<std::map<std::string, ModelOrder>> winners(static_cast<std::size_t>(st.replicates));
        parallel_for(st.replicates, ctx.threads, [&](int r) {
            const std::uint64_t stream = static_cast<std::uint64_t>(length) * 1'000'000ull + static_cast<std::uint64_t>(r);
            const SimulatedData sim =
                simulate(process.order, process.params, process.net, length, {}, RngSpec{ctx.config.seed, stream});
            auto& slot = winners[static_cast<std::size_t>(r)];
            for (const auto& method : st.methods) {
                slot[method] = method == "global"
                                   ? select_global(st.global, sim.panel, sim.exogenous, process.net).winner
                                   : select_stagewise(st.stagewise, sim.panel, sim.exogenous, process.net,
                                                            SearchOptions{1, st.stage_one})
                                             .winner;
            }
        });
        for (const auto& method : st.methods) {
            std::map<std::string, int> tally;
            int hits = 0;
            for (const auto& w : winners) {
                const ModelOrder& o = w.at(method);
                ++tally[o.to_string()];
                hits += o == process.order ? 1 : 0;
            }
            std::vector<std::pair<std::string, int>> rows(tally.begin(), tally.end());
            std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
            for (const auto& [o, n] : rows) counts << method << ',' << length << ",\"" << o << "\"," << n << '\n';
            const double rate = static_cast<double>(hits) / st.replicates;
            summary << method << ',' << length << ',' << st.replicates << ',' << format_double(rate) << '\n';
            ctx.log << method << " T=" << length << ": true order in " << hits << " of " << st.replicates << '\n';
        }
    }
}

void write_manifest(CommandContext& ctx, const std::string& command) {
    std::vector<std::string> outputs = ctx.outputs;
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    const nlohmann::json j{{"manifest_version", kFormatVersion},
                           {"command", command},
                           {"seed", ctx.config.seed},
                           {"config_hash", fnv1a_hex(ctx.config.raw.dump())},
                           {"config_dir", ctx.config.base_dir.string()},
                           {"config", ctx.config.raw},
                           {"formats",
                            {{"panel_csv", kFormatVersion},
                             {"forecast_csv", kFormatVersion},
                             {"selection_trace_csv", kFormatVersion},
                             {"fit_json", kFormatVersion},
                             {"midas_csv", kFormatVersion}}},
                           {"outputs", outputs}};
    write_json(ctx.out_dir / "manifest.json", j);
}

}  // namespace gnarx::cli
