#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"

#include "hsmm/artifacts.hpp"
#include "hsmm/config.hpp"
#include "hsmm/decode.hpp"
#include "hsmm/diagnostics.hpp"
#include "hsmm/dist.hpp"

namespace fs = std::filesystem;
using hsmm::json;

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    int chains = 0;
};

void add_common(CLI::App* sub, Overrides& ov, bool with_seed = true,
                bool with_threads = false) {
    sub->add_option("--config", ov.config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", ov.out_dir, "output directory (overrides config)");
    if (with_seed)
        sub->add_option("--seed", ov.seed, "RNG seed (overrides config)")
            ->each([&ov](const std::string&) { ov.seed_set = true; });
    if (with_threads)
        sub->add_option("--threads", ov.threads, "worker threads (overrides config)");
}

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

void note(const std::string& path) { std::cout << "wrote " << path << "\n"; }

hsmm::TimeSeriesData load_data(const hsmm::DataConfig& dc) {
    return hsmm::load_series_csv(dc.path, dc.schema);
}

hsmm::DesignSpec engineer(hsmm::TimeSeriesData& data, const hsmm::DesignConfig& dc,
                          const hsmm::Vec& x0) {
    hsmm::EngineerOptions opts;
    opts.window = dc.window;
    opts.windowed = dc.windowed;
    opts.session_terms = dc.session_terms;
    opts.standardize = dc.standardize;
    opts.x0_override = x0;
    return hsmm::engineer_covariates(data, opts);
}

int cmd_simulate(const Overrides& ov) {
    hsmm::SimulateConfig cfg = hsmm::parse_simulate_config(hsmm::read_json_file(ov.config_path));
    if (ov.seed_set) cfg.seed = ov.seed;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;

    std::mt19937_64 rng(hsmm::derive_seed(cfg.seed, 0x51));
    hsmm::SimResult sim = hsmm::simulate_realization(cfg.scenario, rng);

    hsmm::CsvSchema schema;
    schema.y_col = "y";
    for (int c = 0; c < sim.data.r(); ++c)
        schema.x_cols.push_back("x" + std::to_string(c + 1));
    schema.session_col = "session";
    std::string data_path = out_path(cfg.out_dir, "data.csv");
    hsmm::write_series_csv(data_path, sim.data, schema);
    note(data_path);
    std::string states_path = out_path(cfg.out_dir, "states.csv");
    hsmm::write_states_csv(states_path, sim.seg);
    note(states_path);

    json truth = {{"params", hsmm::params_to_json(cfg.scenario.params)},
                  {"design", hsmm::design_to_json(cfg.scenario.design)},
                  {"segmentation", hsmm::segmentation_to_json(sim.seg)},
                  {"psi", cfg.scenario.psi},
                  {"ar_carryover", cfg.scenario.ar_carryover},
                  {"x0", sim.data.x0},
                  {"n", sim.data.n()},
                  {"seed", cfg.seed}};
    std::string truth_path = out_path(cfg.out_dir, "truth.json");
    hsmm::write_json_file(truth_path, truth);
    note(truth_path);
    return 0;
}

int cmd_fit(const Overrides& ov) {
    hsmm::FitConfig cfg = hsmm::parse_fit_config(hsmm::read_json_file(ov.config_path));
    if (ov.seed_set) cfg.seed = ov.seed;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.threads > 0) cfg.threads = ov.threads;
    if (ov.chains > 0) cfg.chains = ov.chains;

    hsmm::TimeSeriesData data = load_data(cfg.data);
    hsmm::DesignSpec spec = engineer(data, cfg.design, cfg.data.x0);

    std::vector<hsmm::PosteriorDraws> chains(cfg.chains);
    std::mutex io_mx;
    hsmm::parallel_for(cfg.chains, cfg.threads, [&](long long c) {
        hsmm::McmcConfig mc = cfg.mcmc;
        mc.seed = hsmm::derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(c));
        hsmm::ProgressFn progress;
        if (cfg.mcmc.progress_every > 0) {
            progress = [&, c](long long iter, double ll, const hsmm::Vec& acc) {
                std::lock_guard<std::mutex> g(io_mx);
                std::cout << "chain " << c << "  iter " << iter << "/" << mc.n_iter
                          << "  loglik " << ll << "  accept";
                for (double a : acc) std::printf(" %.3f", a);
                std::cout << "\n" << std::flush;
            };
        }
        chains[c] = hsmm::run_chain(data, spec, cfg.M, cfg.priors, mc, nullptr, progress);
    });

    for (int c = 0; c < cfg.chains; ++c) {
        char name[40];
        std::snprintf(name, sizeof name, "chain_%02d_draws.csv", c);
        std::string path = out_path(cfg.out_dir, name);
        hsmm::write_draws_csv(path, chains[c]);
        note(path);
    }

    std::vector<hsmm::SummaryRow> rows = hsmm::summarize(chains, cfg.ci_level);
    std::string sum_csv = out_path(cfg.out_dir, "summary.csv");
    hsmm::write_summary_csv(sum_csv, rows);
    note(sum_csv);
    std::string sum_json = out_path(cfg.out_dir, "summary.json");
    hsmm::write_json_file(sum_json, hsmm::summary_to_json(rows));
    note(sum_json);

    if (cfg.chains >= 2) {
        json mj = {{"mpsrf", hsmm::mpsrf_from_draws(chains)},
                   {"chains", cfg.chains},
                   {"draws_per_chain", chains[0].records.size()},
                   {"parameters", hsmm::draws_matrix_names(chains[0])}};
        std::string mpath = out_path(cfg.out_dir, "mpsrf.json");
        hsmm::write_json_file(mpath, mj);
        note(mpath);
    }

    json diag = json::array();
    for (int c = 0; c < cfg.chains; ++c) {
        diag.push_back({{"chain", c},
                        {"accept_rate", chains[c].accept_rate},
                        {"kappa", chains[c].kappa},
                        {"clamp_events", chains[c].clamp_events},
                        {"max_truncated_mass", chains[c].max_truncated_mass},
                        {"d_max_used", chains[c].d_max_used},
                        {"final_n_segments", chains[c].final_seg.n_segments()}});
    }
    json dj = {{"chains", diag}, {"n", data.n()}, {"sessions", data.n_sessions()},
               {"M", cfg.M}};
    std::string dpath = out_path(cfg.out_dir, "diagnostics.json");
    hsmm::write_json_file(dpath, dj);
    note(dpath);

    std::string spath = out_path(cfg.out_dir, "final_states.csv");
    hsmm::write_states_csv(spath, chains[0].final_seg);
    note(spath);

    json resolved = hsmm::fit_config_to_json(cfg);
    resolved["resolved_design"] = hsmm::design_to_json(spec);
    resolved["resolved_x0"] = data.x0;
    std::string cpath = out_path(cfg.out_dir, "config_resolved.json");
    hsmm::write_json_file(cpath, resolved);
    note(cpath);
    return 0;
}

int cmd_decode(const Overrides& ov) {
    hsmm::DecodeConfig cfg = hsmm::parse_decode_config(hsmm::read_json_file(ov.config_path));
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;

    hsmm::TimeSeriesData data = load_data(cfg.data);
    hsmm::DesignSpec spec = engineer(data, cfg.design, cfg.data.x0);

    hsmm::ModelParams params;
    if (cfg.has_params) {
        params = cfg.params;
    } else {
        std::vector<hsmm::PosteriorDraws> chains;
        for (const std::string& p : cfg.draws_paths)
            chains.push_back(hsmm::read_draws_csv(p));
        params = hsmm::posterior_mean_params(chains);
    }
    params.validate(data.n_sessions(), spec.cols());

    hsmm::DecodeResult res =
        hsmm::viterbi_decode(data, params, spec, cfg.d_max, cfg.censor_last);
    if (res.truncated_mass > 1e-3)
        std::cerr << "warning: duration truncation mass " << res.truncated_mass
                  << " at d_max " << res.d_max << "\n";

    std::string states_path = out_path(cfg.out_dir, "decoded_states.csv");
    hsmm::write_states_csv(states_path, res.seg);
    note(states_path);
    std::string seg_path = out_path(cfg.out_dir, "decoded_segments.csv");
    hsmm::write_segments_csv(seg_path, res.seg);
    note(seg_path);
    json dj = {{"loglik", res.loglik},
               {"truncated_mass", res.truncated_mass},
               {"d_max", res.d_max},
               {"clamp_events", res.clamp_events},
               {"n_segments", res.seg.n_segments()}};
    std::string jpath = out_path(cfg.out_dir, "decode.json");
    hsmm::write_json_file(jpath, dj);
    note(jpath);
    return 0;
}

int cmd_coverage(const Overrides& ov) {
    hsmm::CoverageConfig cfg = hsmm::parse_coverage_config(hsmm::read_json_file(ov.config_path));
    if (ov.seed_set) cfg.seed = ov.seed;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.threads > 0) cfg.threads = ov.threads;

    std::vector<hsmm::CoverageRow> rows = hsmm::run_coverage_experiment(
        cfg.scenario, cfg.rates, cfg.priors, cfg.mcmc, cfg.seed, cfg.threads);

    std::string cpath = out_path(cfg.out_dir, "coverage.csv");
    hsmm::write_coverage_csv(cpath, rows);
    note(cpath);
    json cj = {{"rows", hsmm::coverage_to_json(rows)},
               {"M", cfg.scenario.M},
               {"psi", cfg.scenario.psi},
               {"n_target", cfg.scenario.n_target},
               {"n_realizations", cfg.scenario.n_realizations},
               {"seed", cfg.seed}};
    std::string jpath = out_path(cfg.out_dir, "coverage.json");
    hsmm::write_json_file(jpath, cj);
    note(jpath);
    return 0;
}

int cmd_diagnose(const Overrides& ov) {
    hsmm::DiagnoseConfig cfg = hsmm::parse_diagnose_config(hsmm::read_json_file(ov.config_path));
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;

    hsmm::TimeSeriesData data = load_data(cfg.data);
    std::vector<int> states = hsmm::read_states_csv(cfg.states_path);
    if (static_cast<long long>(states.size()) != data.n())
        throw hsmm::DataError("states file length does not match the series");
    hsmm::Segmentation seg = hsmm::Segmentation::from_states(states, data.session);

    double psi_hat = hsmm::segment_autocorrelation(data, seg);
    std::string warning;
    double rate = hsmm::recommend_rate(psi_hat, cfg.M, data.n(), &warning);
    double mean_dur = static_cast<double>(data.n()) / seg.n_segments();

    json dj = {{"psi_hat", psi_hat},
               {"recommended_rate", rate},
               {"warning", warning.empty() ? json(nullptr) : json(warning)},
               {"n_segments", seg.n_segments()},
               {"mean_duration", mean_dur},
               {"M", cfg.M},
               {"n", data.n()}};
    std::string jpath = out_path(cfg.out_dir, "diagnose.json");
    hsmm::write_json_file(jpath, dj);
    note(jpath);
    std::cout << "psi_hat " << psi_hat << "  recommended_rate " << rate << "\n";
    if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
    return 0;
}

int cmd_summarize(const Overrides& ov) {
    hsmm::SummarizeConfig cfg =
        hsmm::parse_summarize_config(hsmm::read_json_file(ov.config_path));
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;

    std::vector<hsmm::PosteriorDraws> chains;
    for (const std::string& p : cfg.draws_paths) chains.push_back(hsmm::read_draws_csv(p));

    std::vector<hsmm::SummaryRow> rows = hsmm::summarize(chains, cfg.level);
    std::string csv = out_path(cfg.out_dir, "summary.csv");
    hsmm::write_summary_csv(csv, rows);
    note(csv);
    std::string jpath = out_path(cfg.out_dir, "summary.json");
    hsmm::write_json_file(jpath, hsmm::summary_to_json(rows));
    note(jpath);
    if (chains.size() >= 2) {
        json mj = {{"mpsrf", hsmm::mpsrf_from_draws(chains)},
                   {"chains", chains.size()},
                   {"draws_per_chain", chains[0].records.size()},
                   {"parameters", hsmm::draws_matrix_names(chains[0])}};
        std::string mpath = out_path(cfg.out_dir, "mpsrf.json");
        hsmm::write_json_file(mpath, mj);
        note(mpath);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian semi-Markov segmentation with covariate-driven durations"};
    app.require_subcommand(1);

    Overrides sim_ov, fit_ov, dec_ov, cov_ov, diag_ov, sum_ov;
    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic series");
    add_common(sim, sim_ov);
    CLI::App* fit = app.add_subcommand("fit", "run the posterior sampler");
    add_common(fit, fit_ov, true, true);
    fit->add_option("--chains", fit_ov.chains, "number of chains (overrides config)");
    CLI::App* dec = app.add_subcommand("decode", "maximum a posteriori segmentation");
    add_common(dec, dec_ov, false);
    CLI::App* cov = app.add_subcommand("coverage", "subsampling coverage benchmark");
    add_common(cov, cov_ov, true, true);
    CLI::App* diag = app.add_subcommand("diagnose", "autocorrelation and rate suggestion");
    add_common(diag, diag_ov, false);
    CLI::App* sum = app.add_subcommand("summarize", "summaries from draw files");
    add_common(sum, sum_ov, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_ov);
        if (fit->parsed()) return cmd_fit(fit_ov);
        if (dec->parsed()) return cmd_decode(dec_ov);
        if (cov->parsed()) return cmd_coverage(cov_ov);
        if (diag->parsed()) return cmd_diagnose(diag_ov);
        if (sum->parsed()) return cmd_summarize(sum_ov);
    } catch (const hsmm::ConfigError& e) {
        json err = {{"error", "config"}, {"message", e.what()}, {"field", e.field}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const hsmm::DataError& e) {
        json err = {{"error", "data"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", "runtime"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
