#include "hsmm/config.hpp"

#include <algorithm>

#include "hsmm/simulate.hpp"

namespace hsmm {

namespace {

using nlohmann::json;

std::string join_path(const std::string& base, const char* key) {
    return base.empty() ? key : base + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ConfigError("expected an object", path.empty() ? "(root)" : path);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = std::any_of(allowed.begin(), allowed.end(),
                              [&](const char* k) { return it.key() == k; });
        if (!ok) throw ConfigError("unknown config key", join_path(path, it.key().c_str()));
    }
}

template <class T>
T get_as(const json& v, const std::string& path);

template <>
double get_as<double>(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("expected a number", path);
    return v.get<double>();
}

template <>
long long get_as<long long>(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
    return v.get<long long>();
}

template <>
int get_as<int>(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
    return v.get<int>();
}

template <>
std::uint64_t get_as<std::uint64_t>(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 &&
                                   !v.is_number_unsigned()))
        throw ConfigError("expected a nonnegative integer", path);
    return v.get<std::uint64_t>();
}

template <>
bool get_as<bool>(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("expected true or false", path);
    return v.get<bool>();
}

template <>
std::string get_as<std::string>(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("expected a string", path);
    return v.get<std::string>();
}

template <class T>
T req(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing required field", join_path(path, key));
    return get_as<T>(*it, join_path(path, key));
}

template <class T>
T opt(const json& obj, const std::string& path, const char* key, T def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    return get_as<T>(*it, join_path(path, key));
}

Vec get_vec(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected an array of numbers", path);
    Vec out;
    out.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(get_as<double>(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Mat get_mat(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected an array of arrays", path);
    Mat out;
    out.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(get_vec(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> get_strings(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected an array of strings", path);
    std::vector<std::string> out;
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(get_as<std::string>(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::uint8_t> get_flags(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected an array of booleans", path);
    std::vector<std::uint8_t> out;
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(get_as<bool>(v[i], path + "[" + std::to_string(i) + "]") ? 1 : 0);
    return out;
}

DataConfig parse_data(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"path", "y_col", "x_cols", "session_col", "time_col", "allow_gaps",
                "delimiter", "x0"});
    DataConfig out;
    out.path = req<std::string>(obj, path, "path");
    out.schema.y_col = opt<std::string>(obj, path, "y_col", "y");
    if (auto it = obj.find("x_cols"); it != obj.end())
        out.schema.x_cols = get_strings(*it, join_path(path, "x_cols"));
    out.schema.session_col = opt<std::string>(obj, path, "session_col", "");
    out.schema.time_col = opt<std::string>(obj, path, "time_col", "");
    out.schema.allow_gaps = opt<bool>(obj, path, "allow_gaps", false);
    std::string delim = opt<std::string>(obj, path, "delimiter", ",");
    if (delim.size() != 1)
        throw ConfigError("delimiter must be a single character", join_path(path, "delimiter"));
    out.schema.delimiter = delim[0];
    if (auto it = obj.find("x0"); it != obj.end())
        out.x0 = get_vec(*it, join_path(path, "x0"));
    return out;
}

DesignConfig parse_design(const json& obj, const std::string& path) {
    check_keys(obj, path, {"window", "windowed", "session_terms", "standardize"});
    DesignConfig out;
    out.window = opt<long long>(obj, path, "window", 20);
    if (auto it = obj.find("windowed"); it != obj.end())
        out.windowed = get_flags(*it, join_path(path, "windowed"));
    out.session_terms = opt<bool>(obj, path, "session_terms", true);
    out.standardize = opt<bool>(obj, path, "standardize", true);
    return out;
}

Priors parse_priors(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"theta_mu", "lambda2_mu", "ig_shape", "ig_scale", "rho_conc", "trans_conc",
                "beta_mean", "beta_var"});
    Priors out;
    out.theta_mu = opt<double>(obj, path, "theta_mu", out.theta_mu);
    out.lambda2_mu = opt<double>(obj, path, "lambda2_mu", out.lambda2_mu);
    out.ig_shape = opt<double>(obj, path, "ig_shape", out.ig_shape);
    out.ig_scale = opt<double>(obj, path, "ig_scale", out.ig_scale);
    out.rho_conc = opt<double>(obj, path, "rho_conc", out.rho_conc);
    out.trans_conc = opt<double>(obj, path, "trans_conc", out.trans_conc);
    out.beta_mean = opt<double>(obj, path, "beta_mean", out.beta_mean);
    out.beta_var = opt<double>(obj, path, "beta_var", out.beta_var);
    out.validate();
    return out;
}

McmcConfig parse_mcmc(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"n_iter", "n_adapt", "thin", "subsample_rate", "d_max", "censor_last",
                "stochastic_states", "sigma2_uses_prev_mu", "kappa0", "target_accept",
                "progress_every"});
    McmcConfig out;
    out.n_iter = opt<long long>(obj, path, "n_iter", out.n_iter);
    out.n_adapt = opt<long long>(obj, path, "n_adapt", out.n_adapt);
    out.thin = opt<long long>(obj, path, "thin", out.thin);
    out.subsample_rate = opt<double>(obj, path, "subsample_rate", out.subsample_rate);
    out.d_max = opt<long long>(obj, path, "d_max", out.d_max);
    out.censor_last = opt<bool>(obj, path, "censor_last", out.censor_last);
    out.stochastic_states = opt<bool>(obj, path, "stochastic_states", out.stochastic_states);
    out.sigma2_uses_prev_mu =
        opt<bool>(obj, path, "sigma2_uses_prev_mu", out.sigma2_uses_prev_mu);
    out.kappa0 = opt<double>(obj, path, "kappa0", out.kappa0);
    out.target_accept = opt<double>(obj, path, "target_accept", out.target_accept);
    out.progress_every = opt<long long>(obj, path, "progress_every", out.progress_every);
    out.validate();
    return out;
}

ModelParams parse_params(const json& obj, const std::string& path) {
    check_keys(obj, path, {"mu", "sigma2", "rho", "P", "B"});
    ModelParams out;
    auto need = [&](const char* key) -> const json& {
        auto it = obj.find(key);
        if (it == obj.end()) throw ConfigError("missing required field", join_path(path, key));
        return *it;
    };
    out.mu = get_vec(need("mu"), join_path(path, "mu"));
    out.sigma2 = get_vec(need("sigma2"), join_path(path, "sigma2"));
    out.rho = get_mat(need("rho"), join_path(path, "rho"));
    out.P = get_mat(need("P"), join_path(path, "P"));
    out.B = get_mat(need("B"), join_path(path, "B"));
    out.M = static_cast<int>(out.mu.size());
    return out;
}

SimScenario parse_scenario(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"M", "n_target", "n_realizations", "psi", "ar_carryover", "n_raw_cov",
                "add_product_col", "params", "design"});
    SimScenario sc;
    sc.M = req<int>(obj, path, "M");
    sc.n_target = req<long long>(obj, path, "n_target");
    sc.n_realizations = opt<int>(obj, path, "n_realizations", sc.n_realizations);
    sc.psi = opt<double>(obj, path, "psi", 0.0);
    sc.ar_carryover = opt<bool>(obj, path, "ar_carryover", false);
    sc.n_raw_cov = opt<int>(obj, path, "n_raw_cov", 0);
    sc.add_product_col = opt<bool>(obj, path, "add_product_col", false);
    sc.design.n_cov = sc.n_raw_cov + (sc.add_product_col ? 1 : 0);
    sc.design.session_terms = false;
    auto pit = obj.find("params");
    if (pit != obj.end()) {
        sc.params = parse_params(*pit, join_path(path, "params"));
    } else {
        if (sc.design.n_cov != 0)
            throw ConfigError("params required when covariates are present",
                              join_path(path, "params"));
        sc.params = make_coverage_scenario(sc.M, sc.psi, sc.n_target).params;
    }
    if (auto it = obj.find("design"); it != obj.end()) {
        DesignConfig dc = parse_design(*it, join_path(path, "design"));
        sc.design.window = dc.window;
        sc.design.windowed = dc.windowed;
        sc.design.session_terms = dc.session_terms;
    }
    sc.validate();
    return sc;
}

}  // namespace

FitConfig parse_fit_config(const json& obj) {
    check_keys(obj, "",
               {"data", "design", "model", "priors", "mcmc", "chains", "seed", "threads",
                "ci_level", "out_dir"});
    FitConfig out;
    auto dit = obj.find("data");
    if (dit == obj.end()) throw ConfigError("missing required field", "data");
    out.data = parse_data(*dit, "data");
    if (auto it = obj.find("design"); it != obj.end()) out.design = parse_design(*it, "design");
    auto mit = obj.find("model");
    if (mit == obj.end()) throw ConfigError("missing required field", "model");
    check_keys(*mit, "model", {"M"});
    out.M = req<int>(*mit, "model", "M");
    if (out.M < 1) throw ConfigError("state count must be at least 1", "model.M");
    if (auto it = obj.find("priors"); it != obj.end()) out.priors = parse_priors(*it, "priors");
    if (auto it = obj.find("mcmc"); it != obj.end()) out.mcmc = parse_mcmc(*it, "mcmc");
    out.chains = opt<int>(obj, "", "chains", 1);
    if (out.chains < 1) throw ConfigError("chain count must be positive", "chains");
    out.seed = opt<std::uint64_t>(obj, "", "seed", 0);
    out.threads = opt<int>(obj, "", "threads", 1);
    if (out.threads < 1) throw ConfigError("thread count must be positive", "threads");
    out.ci_level = opt<double>(obj, "", "ci_level", 0.95);
    if (!(out.ci_level > 0.0 && out.ci_level < 1.0))
        throw ConfigError("credible level must lie in (0, 1)", "ci_level");
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

SimulateConfig parse_simulate_config(const json& obj) {
    check_keys(obj, "", {"scenario", "seed", "out_dir"});
    SimulateConfig out;
    auto it = obj.find("scenario");
    if (it == obj.end()) throw ConfigError("missing required field", "scenario");
    out.scenario = parse_scenario(*it, "scenario");
    out.seed = opt<std::uint64_t>(obj, "", "seed", 0);
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

CoverageConfig parse_coverage_config(const json& obj) {
    check_keys(obj, "", {"scenario", "rates", "priors", "mcmc", "seed", "threads", "out_dir"});
    CoverageConfig out;
    auto it = obj.find("scenario");
    if (it == obj.end()) throw ConfigError("missing required field", "scenario");
    out.scenario = parse_scenario(*it, "scenario");
    auto rit = obj.find("rates");
    if (rit == obj.end()) throw ConfigError("missing required field", "rates");
    out.rates = get_vec(*rit, "rates");
    if (auto p = obj.find("priors"); p != obj.end()) out.priors = parse_priors(*p, "priors");
    if (auto m = obj.find("mcmc"); m != obj.end()) {
        out.mcmc = parse_mcmc(*m, "mcmc");
    } else {
        out.mcmc.n_iter = 2000;
        out.mcmc.n_adapt = 200;
    }
    out.seed = opt<std::uint64_t>(obj, "", "seed", 0);
    out.threads = opt<int>(obj, "", "threads", 1);
    if (out.threads < 1) throw ConfigError("thread count must be positive", "threads");
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

DecodeConfig parse_decode_config(const json& obj) {
    check_keys(obj, "",
               {"data", "design", "params", "draws", "d_max", "censor_last", "out_dir"});
    DecodeConfig out;
    auto dit = obj.find("data");
    if (dit == obj.end()) throw ConfigError("missing required field", "data");
    out.data = parse_data(*dit, "data");
    if (auto it = obj.find("design"); it != obj.end()) out.design = parse_design(*it, "design");
    bool have_params = obj.find("params") != obj.end();
    bool have_draws = obj.find("draws") != obj.end();
    if (have_params == have_draws)
        throw ConfigError("provide exactly one of 'params' or 'draws'", "params");
    if (have_params) {
        out.params = parse_params(obj["params"], "params");
        out.has_params = true;
    } else {
        out.draws_paths = get_strings(obj["draws"], "draws");
        if (out.draws_paths.empty())
            throw ConfigError("draws list cannot be empty", "draws");
    }
    out.d_max = opt<long long>(obj, "", "d_max", 0);
    if (out.d_max < 0) throw ConfigError("d_max must be nonnegative", "d_max");
    out.censor_last = opt<bool>(obj, "", "censor_last", false);
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

DiagnoseConfig parse_diagnose_config(const json& obj) {
    check_keys(obj, "", {"data", "states", "M", "out_dir"});
    DiagnoseConfig out;
    auto dit = obj.find("data");
    if (dit == obj.end()) throw ConfigError("missing required field", "data");
    out.data = parse_data(*dit, "data");
    out.states_path = req<std::string>(obj, "", "states");
    out.M = req<int>(obj, "", "M");
    if (out.M < 1) throw ConfigError("state count must be at least 1", "M");
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

SummarizeConfig parse_summarize_config(const json& obj) {
    check_keys(obj, "", {"draws", "level", "out_dir"});
    SummarizeConfig out;
    auto it = obj.find("draws");
    if (it == obj.end()) throw ConfigError("missing required field", "draws");
    out.draws_paths = get_strings(*it, "draws");
    if (out.draws_paths.empty()) throw ConfigError("draws list cannot be empty", "draws");
    out.level = opt<double>(obj, "", "level", 0.95);
    if (!(out.level > 0.0 && out.level < 1.0))
        throw ConfigError("credible level must lie in (0, 1)", "level");
    out.out_dir = opt<std::string>(obj, "", "out_dir", ".");
    return out;
}

json fit_config_to_json(const FitConfig& cfg) {
    json j;
    j["data"]["path"] = cfg.data.path;
    j["data"]["y_col"] = cfg.data.schema.y_col;
    j["data"]["x_cols"] = cfg.data.schema.x_cols;
    j["data"]["session_col"] = cfg.data.schema.session_col;
    j["data"]["time_col"] = cfg.data.schema.time_col;
    j["data"]["allow_gaps"] = cfg.data.schema.allow_gaps;
    j["data"]["delimiter"] = std::string(1, cfg.data.schema.delimiter);
    j["data"]["x0"] = cfg.data.x0;
    j["design"]["window"] = cfg.design.window;
    json wf = json::array();
    for (auto f : cfg.design.windowed) wf.push_back(static_cast<bool>(f));
    j["design"]["windowed"] = wf;
    j["design"]["session_terms"] = cfg.design.session_terms;
    j["design"]["standardize"] = cfg.design.standardize;
    j["model"]["M"] = cfg.M;
    j["priors"] = {{"theta_mu", cfg.priors.theta_mu},
                   {"lambda2_mu", cfg.priors.lambda2_mu},
                   {"ig_shape", cfg.priors.ig_shape},
                   {"ig_scale", cfg.priors.ig_scale},
                   {"rho_conc", cfg.priors.rho_conc},
                   {"trans_conc", cfg.priors.trans_conc},
                   {"beta_mean", cfg.priors.beta_mean},
                   {"beta_var", cfg.priors.beta_var}};
    j["mcmc"] = {{"n_iter", cfg.mcmc.n_iter},
                 {"n_adapt", cfg.mcmc.n_adapt},
                 {"thin", cfg.mcmc.thin},
                 {"subsample_rate", cfg.mcmc.subsample_rate},
                 {"d_max", cfg.mcmc.d_max},
                 {"censor_last", cfg.mcmc.censor_last},
                 {"stochastic_states", cfg.mcmc.stochastic_states},
                 {"sigma2_uses_prev_mu", cfg.mcmc.sigma2_uses_prev_mu},
                 {"kappa0", cfg.mcmc.kappa0},
                 {"target_accept", cfg.mcmc.target_accept},
                 {"progress_every", cfg.mcmc.progress_every}};
    j["chains"] = cfg.chains;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["ci_level"] = cfg.ci_level;
    j["out_dir"] = cfg.out_dir;
    return j;
}

}  // namespace hsmm
