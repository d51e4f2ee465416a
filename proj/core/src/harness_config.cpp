#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "transferda/errors.hpp"
#include "transferda/harness.hpp"
#include "transferda/io.hpp"

namespace tda {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return item.key() == k; }) == allowed.end()) {
            throw ConfigError(std::string("config: unknown key '") + item.key() + "' in " + where);
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const char* key, const char* where, double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number())
        throw ConfigError(std::string("config: ") + where + "." + key + " must be a number");
    return v->get<double>();
}

long long get_integer(const json& obj, const char* key, const char* where, long long fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned())
        throw ConfigError(std::string("config: ") + where + "." + key + " must be an integer");
    return v->get<long long>();
}

std::uint64_t get_seed(const json& obj, const char* key, const char* where, std::uint64_t fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned())
        throw ConfigError(std::string("config: ") + where + "." + key + " must be an integer");
    if (v->is_number_integer() && v->get<long long>() < 0)
        throw ConfigError(std::string("config: ") + where + "." + key + " must be >= 0");
    return v->get<std::uint64_t>();
}

bool get_flag(const json& obj, const char* key, const char* where, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean())
        throw ConfigError(std::string("config: ") + where + "." + key + " must be a boolean");
    return v->get<bool>();
}

void parse_dynamics(const json& obj, DynamicsBlock& dyn) {
    check_keys(obj, "dynamics",
               {"gamma", "omega", "beta", "dt", "train_steps", "discard_fraction", "x0",
                "seed_train", "seed_truth", "truth_spinup_steps"});
    dyn.params.gamma = get_number(obj, "gamma", "dynamics", dyn.params.gamma);
    dyn.params.omega = get_number(obj, "omega", "dynamics", dyn.params.omega);
    dyn.params.beta = get_number(obj, "beta", "dynamics", dyn.params.beta);
    dyn.dt = get_number(obj, "dt", "dynamics", dyn.dt);
    dyn.train_steps = get_integer(obj, "train_steps", "dynamics", dyn.train_steps);
    dyn.discard_fraction = get_number(obj, "discard_fraction", "dynamics", dyn.discard_fraction);
    if (const json* v = find(obj, "x0")) {
        if (!v->is_array() || v->size() != 3)
            throw ConfigError("config: dynamics.x0 must be an array of three numbers");
        for (int i = 0; i < 3; ++i) {
            if (!(*v)[i].is_number())
                throw ConfigError("config: dynamics.x0 must be an array of three numbers");
            dyn.x0[i] = (*v)[i].get<double>();
        }
    }
    dyn.seed_train = get_seed(obj, "seed_train", "dynamics", dyn.seed_train);
    dyn.seed_truth = get_seed(obj, "seed_truth", "dynamics", dyn.seed_truth);
    dyn.truth_spinup_steps = get_integer(obj, "truth_spinup_steps", "dynamics", dyn.truth_spinup_steps);

    if (!(dyn.dt > 0.0)) throw ConfigError("config: dynamics.dt must be positive");
    if (dyn.train_steps < 2) throw ConfigError("config: dynamics.train_steps must be >= 2");
    if (!(dyn.discard_fraction >= 0.0 && dyn.discard_fraction < 1.0))
        throw ConfigError("config: dynamics.discard_fraction must lie in [0, 1)");
    if (dyn.truth_spinup_steps < 0)
        throw ConfigError("config: dynamics.truth_spinup_steps must be >= 0");
}

void parse_observation(const json& obj, ObservationBlock& ob) {
    check_keys(obj, "observation", {"selector", "sigma_obs", "q", "seed_noise", "cycles"});
    if (const json* v = find(obj, "selector")) {
        if (!v->is_array() || v->empty())
            throw ConfigError("config: observation.selector must be a non-empty array");
        ob.selector.clear();
        for (const auto& e : *v) {
            if (!e.is_number_integer() && !e.is_number_unsigned())
                throw ConfigError("config: observation.selector entries must be integers");
            ob.selector.push_back(e.get<int>());
        }
    }
    ob.sigma_obs = get_number(obj, "sigma_obs", "observation", ob.sigma_obs);
    ob.q = static_cast<int>(get_integer(obj, "q", "observation", ob.q));
    ob.seed_noise = get_seed(obj, "seed_noise", "observation", ob.seed_noise);
    ob.cycles = static_cast<int>(get_integer(obj, "cycles", "observation", ob.cycles));

    if (!(ob.sigma_obs > 0.0)) throw ConfigError("config: observation.sigma_obs must be positive");
    if (ob.q < 1) throw ConfigError("config: observation.q must be >= 1");
    if (ob.cycles < 0) throw ConfigError("config: observation.cycles must be >= 0");
    std::set<int> seen;
    for (int s : ob.selector) {
        if (s < 0 || s > 2)
            throw ConfigError("config: observation.selector entries must lie in [0, 2]");
        if (!seen.insert(s).second)
            throw ConfigError("config: observation.selector entries must be distinct");
    }
}

void parse_dato(const json& obj, DatoBlock& blk) {
    check_keys(obj, "dato", {"sigma", "eps", "S", "koopman_forecast", "forecast_delta"});
    if (const json* v = find(obj, "sigma")) {
        if (v->is_string()) {
            if (v->get<std::string>() != "median")
                throw ConfigError("config: dato.sigma must be a positive number or \"median\"");
            blk.use_median_sigma = true;
        } else if (v->is_number()) {
            blk.use_median_sigma = false;
            blk.sigma = v->get<double>();
            if (!(blk.sigma > 0.0))
                throw ConfigError("config: dato.sigma must be a positive number or \"median\"");
        } else {
            throw ConfigError("config: dato.sigma must be a positive number or \"median\"");
        }
    }
    blk.eps = get_number(obj, "eps", "dato", blk.eps);
    blk.S = static_cast<int>(get_integer(obj, "S", "dato", blk.S));
    blk.koopman_forecast = get_flag(obj, "koopman_forecast", "dato", blk.koopman_forecast);
    blk.forecast_delta = static_cast<int>(get_integer(obj, "forecast_delta", "dato", blk.forecast_delta));

    if (!(blk.eps > 0.0)) throw ConfigError("config: dato.eps must be positive");
    if (blk.S < 1) throw ConfigError("config: dato.S must be >= 1");
    if (blk.forecast_delta < 1) throw ConfigError("config: dato.forecast_delta must be >= 1");
}

void parse_qmda(const json& obj, QmdaBlock& blk) {
    check_keys(obj, "qmda",
               {"L", "r", "S", "k_bw", "delays", "epsilon", "observable", "sinkhorn_tol",
                "sinkhorn_max_iter", "multi_horizon"});
    blk.L = static_cast<int>(get_integer(obj, "L", "qmda", blk.L));
    blk.r = static_cast<int>(get_integer(obj, "r", "qmda", blk.r));
    blk.S = static_cast<int>(get_integer(obj, "S", "qmda", blk.S));
    blk.k_bw = static_cast<int>(get_integer(obj, "k_bw", "qmda", blk.k_bw));
    blk.delays = static_cast<int>(get_integer(obj, "delays", "qmda", blk.delays));
    blk.epsilon = get_number(obj, "epsilon", "qmda", blk.epsilon);
    blk.observable = static_cast<int>(get_integer(obj, "observable", "qmda", blk.observable));
    blk.sinkhorn_tol = get_number(obj, "sinkhorn_tol", "qmda", blk.sinkhorn_tol);
    blk.sinkhorn_max_iter =
        static_cast<int>(get_integer(obj, "sinkhorn_max_iter", "qmda", blk.sinkhorn_max_iter));
    blk.multi_horizon = get_flag(obj, "multi_horizon", "qmda", blk.multi_horizon);

    if (blk.L < 1) throw ConfigError("config: qmda.L must be >= 1");
    if (blk.r < 1) throw ConfigError("config: qmda.r must be >= 1");
    if (blk.S < 2) throw ConfigError("config: qmda.S must be >= 2");
    if (blk.k_bw < 1) throw ConfigError("config: qmda.k_bw must be >= 1");
    if (blk.delays < 1) throw ConfigError("config: qmda.delays must be >= 1");
    if (!(blk.epsilon > 0.0)) throw ConfigError("config: qmda.epsilon must be positive");
    if (blk.observable < 0 || blk.observable > 2)
        throw ConfigError("config: qmda.observable must lie in [0, 2]");
    if (!(blk.sinkhorn_tol > 0.0)) throw ConfigError("config: qmda.sinkhorn_tol must be positive");
    if (blk.sinkhorn_max_iter < 1)
        throw ConfigError("config: qmda.sinkhorn_max_iter must be >= 1");
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    check_keys(root, "the top level", {"framework", "dynamics", "observation", "dato", "qmda"});

    ExperimentConfig cfg;
    if (const json* v = find(root, "framework")) {
        if (!v->is_string()) throw ConfigError("config: framework must be a string");
        cfg.framework = v->get<std::string>();
    }
    if (cfg.framework != "dato" && cfg.framework != "qmda" && cfg.framework != "both")
        throw ConfigError("config: framework must be one of dato, qmda, both");

    if (const json* v = find(root, "dynamics")) {
        if (!v->is_object()) throw ConfigError("config: dynamics must be an object");
        parse_dynamics(*v, cfg.dynamics);
    }
    if (const json* v = find(root, "observation")) {
        if (!v->is_object()) throw ConfigError("config: observation must be an object");
        parse_observation(*v, cfg.observation);
    }
    if (const json* v = find(root, "dato")) {
        if (!v->is_object()) throw ConfigError("config: dato must be an object");
        parse_dato(*v, cfg.dato);
    }
    if (const json* v = find(root, "qmda")) {
        if (!v->is_object()) throw ConfigError("config: qmda must be an object");
        parse_qmda(*v, cfg.qmda);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config_json(read_text_file(path));
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    const DynamicsBlock& d = cfg.dynamics;
    const ObservationBlock& o = cfg.observation;
    const DatoBlock& a = cfg.dato;
    const QmdaBlock& b = cfg.qmda;

    std::string s;
    s.reserve(1024);
    s += "{\"framework\":\"" + cfg.framework + "\",";
    s += "\"dynamics\":{";
    s += "\"gamma\":" + fmt_g17(d.params.gamma) + ",";
    s += "\"omega\":" + fmt_g17(d.params.omega) + ",";
    s += "\"beta\":" + fmt_g17(d.params.beta) + ",";
    s += "\"dt\":" + fmt_g17(d.dt) + ",";
    s += "\"train_steps\":" + std::to_string(d.train_steps) + ",";
    s += "\"discard_fraction\":" + fmt_g17(d.discard_fraction) + ",";
    s += "\"x0\":[" + fmt_g17(d.x0[0]) + "," + fmt_g17(d.x0[1]) + "," + fmt_g17(d.x0[2]) + "],";
    s += "\"seed_train\":" + std::to_string(d.seed_train) + ",";
    s += "\"seed_truth\":" + std::to_string(d.seed_truth) + ",";
    s += "\"truth_spinup_steps\":" + std::to_string(d.truth_spinup_steps) + "},";
    s += "\"observation\":{";
    s += "\"selector\":[";
    for (std::size_t i = 0; i < o.selector.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(o.selector[i]);
    }
    s += "],";
    s += "\"sigma_obs\":" + fmt_g17(o.sigma_obs) + ",";
    s += "\"q\":" + std::to_string(o.q) + ",";
    s += "\"seed_noise\":" + std::to_string(o.seed_noise) + ",";
    s += "\"cycles\":" + std::to_string(o.cycles) + "},";
    s += "\"dato\":{";
    s += std::string("\"sigma\":") + (a.use_median_sigma ? "\"median\"" : fmt_g17(a.sigma)) + ",";
    s += "\"eps\":" + fmt_g17(a.eps) + ",";
    s += "\"S\":" + std::to_string(a.S) + ",";
    s += std::string("\"koopman_forecast\":") + (a.koopman_forecast ? "true" : "false") + ",";
    s += "\"forecast_delta\":" + std::to_string(a.forecast_delta) + "},";
    s += "\"qmda\":{";
    s += "\"L\":" + std::to_string(b.L) + ",";
    s += "\"r\":" + std::to_string(b.r) + ",";
    s += "\"S\":" + std::to_string(b.S) + ",";
    s += "\"k_bw\":" + std::to_string(b.k_bw) + ",";
    s += "\"delays\":" + std::to_string(b.delays) + ",";
    s += "\"epsilon\":" + fmt_g17(b.epsilon) + ",";
    s += "\"observable\":" + std::to_string(b.observable) + ",";
    s += "\"sinkhorn_tol\":" + fmt_g17(b.sinkhorn_tol) + ",";
    s += "\"sinkhorn_max_iter\":" + std::to_string(b.sinkhorn_max_iter) + ",";
    s += std::string("\"multi_horizon\":") + (b.multi_horizon ? "true" : "false") + "}}";
    return s;
}

std::string config_hash(const ExperimentConfig& cfg) {
    return hex64(fnv1a64(canonical_config_json(cfg)));
}

}  // namespace tda
