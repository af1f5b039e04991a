#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "gnarx/errors.hpp"

namespace gnarx::cli {

namespace {

const std::set<std::string> kTopLevel{"panel",     "standardize", "exogenous", "network",   "order",
                                      "search",    "split",       "estimation", "evaluation", "horizon",
                                      "scenarios", "bootstrap",   "midas",     "simstudy",  "seed"};

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + key + ": unexpected type");
    }
}

const nlohmann::json& object_field(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_object()) throw ConfigError(where + key + ": expected an object");
    return v;
}

fs::path existing_file(const fs::path& base, const std::string& text, const std::string& field) {
    if (text.empty()) throw ConfigError(field + ": empty path");
    fs::path p(text);
    if (p.is_relative()) p = base / p;
    if (!fs::is_regular_file(p)) throw ConfigError(field + ": file not found: " + p.string());
    return p;
}

CalendarStamp stamp_field(const nlohmann::json& j, const std::string& key, const std::string& where) {
    try {
        return CalendarStamp::parse(j.at(key).get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(where + key + ": " + e.what());
    }
}

ModelOrder order_from(const nlohmann::json& j, const fs::path& base) {
    nlohmann::json spec = j;
    if (j.is_string()) {
        const fs::path path = existing_file(base, j.get<std::string>(), "order");
        std::ifstream in(path);
        try {
            in >> spec;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("order: ") + e.what());
        }
        if (spec.contains("order")) spec = spec["order"];
    }
    try {
        return spec.get<ModelOrder>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("order: ") + e.what());
    }
}

StageOneTerms stage_one_from(const nlohmann::json& j, StageOneTerms fallback, const std::string& where) {
    const auto text = get_field<std::string>(j, "stage_one", fallback == StageOneTerms::none ? "none" : "saturated", where);
    if (text == "none") return StageOneTerms::none;
    if (text == "saturated") return StageOneTerms::saturated;
    throw ConfigError(where + "stage_one: expected none or saturated");
}

SearchSpace space_from(const nlohmann::json& j, SearchSpace space, const std::string& where) {
    space.p_max = get_field(j, "p_max", space.p_max, where);
    space.s_max = get_field(j, "s_max", space.s_max, where);
    space.p_prime_max = get_field(j, "p_prime_max", space.p_prime_max, where);
    try {
        space.alpha = parse_alpha_mode(get_field<std::string>(j, "alpha", to_string(space.alpha), where));
    } catch (const Error& e) {
        throw ConfigError(where + "alpha: " + e.what());
    }
    try {
        space.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(where.substr(0, where.size() - 1) + ": " + e.what());
    }
    return space;
}

Panel slice_window(const Panel& p, const CalendarStamp& first, const CalendarStamp& last) {
    const auto a = p.time_index(first);
    const auto b = p.time_index(last);
    if (!a || !b) throw DataError("series do not share a common calendar window");
    return p.slice_times(*a, *b - *a + 1);
}

Eigen::MatrixXd reorder(const ExportMatrix& m, const std::vector<std::string>& nodes) {
    std::vector<int> index;
    for (const auto& name : nodes) {
        const auto it = std::find(m.nodes.begin(), m.nodes.end(), name);
        if (it == m.nodes.end()) throw LookupError("export matrix has no node '" + name + "'");
        index.push_back(static_cast<int>(it - m.nodes.begin()));
    }
    return m.values(index, index);
}

Network build_network(const NetworkSource& source, const std::vector<std::string>& nodes) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    if (source.type == "edges") return Network::from_edges(nodes, load_edge_list_csv(source.path));
    if (source.type == "fully_connected") {
        return build_fully_connected(reorder(load_export_matrix_csv(source.path), nodes), nodes);
    }
    if (source.type == "nearest_neighbour") {
        return build_nearest_neighbour(reorder(load_export_matrix_csv(source.path), nodes), nodes,
                                       source.allow_tie_break);
    }
    if (source.type == "none") return Network(nodes, Eigen::MatrixXd::Zero(n, n), MaskMatrix::Constant(n, n, false));
    Network net = five_node_network();
    if (net.nodes() != nodes) throw DataError("the five_node network needs panel nodes 1..5 in order");
    return net;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& input, const fs::path& base_dir) {
    if (!input.is_object()) throw ConfigError("configuration must be a JSON object");
    RunConfig c;
    nlohmann::json j = input;
    c.base_dir = base_dir;
    if (input.contains("manifest_version")) {
        if (!input.contains("config") || !input.contains("config_dir")) {
            throw ConfigError("manifest: missing config or config_dir");
        }
        j = input["config"];
        c.base_dir = input["config_dir"].get<std::string>();
        if (input.contains("seed")) j["seed"] = input["seed"];
    }
    c.raw = j;
    for (const auto& [key, value] : j.items()) {
        if (!kTopLevel.contains(key)) throw ConfigError("unknown field '" + key + "'");
    }
    const fs::path& base = c.base_dir;

    c.seed = get_field<std::uint64_t>(j, "seed", c.seed, "");
    if (j.contains("panel")) c.panel = existing_file(base, get_field<std::string>(j, "panel", "", ""), "panel");
    c.standardize = get_field(j, "standardize", false, "");

    if (j.contains("exogenous")) {
        if (!j["exogenous"].is_array()) throw ConfigError("exogenous: expected an array");
        int index = 0;
        for (const auto& e : j["exogenous"]) {
            const std::string where = "exogenous[" + std::to_string(index++) + "].";
            if (!e.is_object()) throw ConfigError(where.substr(0, where.size() - 1) + ": expected an object");
            ExogenousSource s;
            s.name = get_field<std::string>(e, "name", "", where);
            if (s.name.empty()) throw ConfigError(where + "name: required");
            s.path = existing_file(base, get_field<std::string>(e, "path", "", where), where + "path");
            s.difference = get_field(e, "difference", false, where);
            s.standardize = get_field(e, "standardize", false, where);
            if (e.contains("zero_before")) s.zero_before = stamp_field(e, "zero_before", where);
            c.exogenous.push_back(std::move(s));
        }
    }

    if (j.contains("network")) {
        const auto& n = object_field(j, "network", "");
        c.network.type = get_field<std::string>(n, "type", "edges", "network.");
        static const std::set<std::string> types{"edges", "fully_connected", "nearest_neighbour", "none", "five_node"};
        if (!types.contains(c.network.type)) throw ConfigError("network.type: unknown type '" + c.network.type + "'");
        if (c.network.type != "none" && c.network.type != "five_node") {
            c.network.path = existing_file(base, get_field<std::string>(n, "path", "", "network."), "network.path");
        }
        c.network.allow_tie_break = get_field(n, "allow_tie_break", false, "network.");
    } else {
        c.network.type = "none";
    }

    if (j.contains("order")) c.order = order_from(j["order"], base);
    if (j.contains("search")) {
        const auto& s = object_field(j, "search", "");
        SearchConfig sc;
        sc.space = space_from(s, sc.space, "search.");
        sc.method = get_field<std::string>(s, "method", sc.method, "search.");
        if (sc.method != "stagewise" && sc.method != "global" && sc.method != "msfe") {
            throw ConfigError("search.method: expected stagewise, global or msfe");
        }
        sc.fit_months = get_field(s, "fit_months", sc.fit_months, "search.");
        sc.eval_months = get_field(s, "eval_months", sc.eval_months, "search.");
        sc.stage_one = stage_one_from(s, sc.stage_one, "search.");
        c.search = sc;
    }
    if (j.contains("split")) c.split = stamp_field(j, "split", "");

    const auto estimation = get_field<std::string>(j, "estimation", "fgls", "");
    if (estimation == "fgls") {
        c.estimation = EstimationMethod::fgls;
    } else if (estimation == "ols") {
        c.estimation = EstimationMethod::ols;
    } else {
        throw ConfigError("estimation: expected fgls or ols");
    }

    if (j.contains("evaluation")) {
        const auto& e = object_field(j, "evaluation", "");
        auto& ev = c.evaluation;
        ev.refit = get_field(e, "refit", ev.refit, "evaluation.");
        ev.in_sample = get_field(e, "in_sample", ev.in_sample, "evaluation.");
        ev.comparators = get_field(e, "comparators", ev.comparators, "evaluation.");
        for (const auto& name : ev.comparators) {
            if (name != "var" && name != "ar" && name != "naive") {
                throw ConfigError("evaluation.comparators: unknown comparator '" + name + "'");
            }
        }
        ev.var_p = get_field(e, "var_p", ev.var_p, "evaluation.");
        if (ev.var_p < 1) throw ConfigError("evaluation.var_p: must be >= 1");
        ev.var_intercept = get_field(e, "var_intercept", ev.var_intercept, "evaluation.");
    }

    c.horizon = get_field(j, "horizon", c.horizon, "");
    if (c.horizon < 1) throw ConfigError("horizon: must be >= 1");
    for (const auto& s : get_field(j, "scenarios", std::vector<std::string>{}, "")) {
        c.scenarios.push_back(existing_file(base, s, "scenarios"));
    }

    if (j.contains("bootstrap")) {
        const auto& b = object_field(j, "bootstrap", "");
        c.replicates = get_field(b, "replicates", c.replicates, "bootstrap.");
        c.alpha = get_field(b, "alpha", c.alpha, "bootstrap.");
        if (c.replicates < 1) throw ConfigError("bootstrap.replicates: must be >= 1");
        if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("bootstrap.alpha: must lie in (0, 1)");
    }

    if (j.contains("midas")) {
        const auto& m = object_field(j, "midas", "");
        MidasConfig mc;
        mc.quarterly = existing_file(base, get_field<std::string>(m, "quarterly", "", "midas."), "midas.quarterly");
        mc.node = get_field<std::string>(m, "node", "", "midas.");
        if (mc.node.empty()) throw ConfigError("midas.node: required");
        mc.spec.mode = parse_midas_mode(get_field<std::string>(m, "mode", "single_lag", "midas."));
        mc.spec.lags = get_field(m, "lags", mc.spec.lags, "midas.");
        mc.spec.lag_index = get_field(m, "lag_index", mc.spec.lag_index, "midas.");
        const auto theta = get_field(m, "theta", std::vector<double>{0.0, 0.0}, "midas.");
        if (theta.size() != 2) throw ConfigError("midas.theta: expected two values");
        mc.spec.theta1 = theta[0];
        mc.spec.theta2 = theta[1];
        mc.spec.intercept = get_field(m, "intercept", true, "midas.");
        mc.spec.validate();
        for (const auto& q : get_field(m, "quarters", std::vector<std::string>{}, "midas.")) {
            try {
                mc.quarters.push_back(QuarterStamp::parse(q));
            } catch (const Error& e) {
                throw ConfigError(std::string("midas.quarters: ") + e.what());
            }
        }
        c.midas = mc;
    }

    if (j.contains("simstudy")) {
        const auto& s = object_field(j, "simstudy", "");
        auto& st = c.simstudy;
        st.replicates = get_field(s, "replicates", st.replicates, "simstudy.");
        st.lengths = get_field(s, "lengths", st.lengths, "simstudy.");
        st.methods = get_field(s, "methods", st.methods, "simstudy.");
        st.stage_one = stage_one_from(s, st.stage_one, "simstudy.");
        if (st.replicates < 1) throw ConfigError("simstudy.replicates: must be >= 1");
        for (int t : st.lengths) {
            if (t < 20) throw ConfigError("simstudy.lengths: every length must be >= 20");
        }
        for (const auto& m : st.methods) {
            if (m != "global" && m != "stagewise") throw ConfigError("simstudy.methods: unknown method '" + m + "'");
        }
        if (s.contains("global")) st.global = space_from(object_field(s, "global", "simstudy."), st.global, "simstudy.global.");
        if (s.contains("stagewise")) {
            st.stagewise = space_from(object_field(s, "stagewise", "simstudy."), st.stagewise, "simstudy.stagewise.");
        }
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(j, fs::absolute(path).parent_path());
}

LoadedData load_data(const RunConfig& config) {
    if (!config.panel) throw ConfigError("panel: required for this command");
    const Panel raw = load_panel_csv(*config.panel);

    std::vector<Panel> levels;
    std::vector<Panel> model;
    for (const auto& source : config.exogenous) {
        Panel level = load_panel_csv(source.path).select_nodes(raw.nodes());
        if (level.times().back() < raw.times().back()) {
            throw DataError("regressor '" + source.name + "' ends before the panel");
        }
        model.push_back(source.difference ? difference(level) : level);
        levels.push_back(std::move(level));
    }

    CalendarStamp first = raw.times().front();
    const CalendarStamp last = raw.times().back();
    for (const auto& m : model) first = std::max(first, m.times().front());
    if (first > last) throw DataError("panel and regressors share no months");

    LoadedData out{slice_window(raw, first, last), {}, {}, {}, {}, {}, build_network(config.network, raw.nodes())};
    for (std::size_t h = 0; h < model.size(); ++h) {
        const auto& source = config.exogenous[h];
        Panel m = slice_window(model[h], first, last);
        if (source.zero_before) m = zero_fill_before(m, *source.zero_before);
        RegressorTransform transform{source.difference, {}};
        if (source.standardize) {
            auto s = standardize(m);
            m = std::move(s.panel);
            transform.scales = std::move(s.scales);
        }
        out.exogenous.push_back(std::move(m));
        out.exogenous_levels.push_back(slice_window(levels[h], first, last));
        out.transforms.push_back(std::move(transform));
        out.regressor_names.push_back(source.name);
    }
    if (config.standardize) {
        auto s = standardize(out.panel);
        out.panel = std::move(s.panel);
        out.panel_scales = std::move(s.scales);
    }
    return out;
}

LoadedData in_sample(const LoadedData& data, const std::optional<CalendarStamp>& split) {
    if (!split) return data;
    const int count = split_column(data.panel, *split);
    LoadedData out = data;
    out.panel = data.panel.slice_times(0, count);
    for (auto& e : out.exogenous) e = e.slice_times(0, count);
    for (auto& e : out.exogenous_levels) e = e.slice_times(0, count);
    return out;
}

Panel to_levels(const LoadedData& data, const Panel& model_space) {
    if (data.panel_scales.empty()) return model_space;
    return destandardize(model_space, data.panel_scales);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (const unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

}  // namespace gnarx::cli
