#pragma once

#include <string>

#include "json.hpp"

#include "hsmm/ingest.hpp"
#include "hsmm/model.hpp"
#include "hsmm/sampler.hpp"
#include "hsmm/simulate.hpp"

namespace hsmm {

// Every parser rejects unknown keys and names the offending field in the
// raised ConfigError.

struct DataConfig {
    std::string path;
    CsvSchema schema;
    Vec x0;  // optional override for the pre-series covariate row
};

struct DesignConfig {
    long long window = 20;
    std::vector<std::uint8_t> windowed;
    bool session_terms = true;
    bool standardize = true;
};

struct FitConfig {
    DataConfig data;
    DesignConfig design;
    int M = 2;
    Priors priors;
    McmcConfig mcmc;
    int chains = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    double ci_level = 0.95;
    std::string out_dir = ".";
};

struct SimulateConfig {
    SimScenario scenario;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
};

struct CoverageConfig {
    SimScenario scenario;
    Vec rates;
    Priors priors;
    McmcConfig mcmc;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
};

struct DecodeConfig {
    DataConfig data;
    DesignConfig design;
    bool has_params = false;
    ModelParams params;                   // exactly one of params ...
    std::vector<std::string> draws_paths;  // ... or draws files (posterior means)
    long long d_max = 0;
    bool censor_last = false;
    std::string out_dir = ".";
};

struct DiagnoseConfig {
    DataConfig data;
    std::string states_path;
    int M = 2;
    std::string out_dir = ".";
};

struct SummarizeConfig {
    std::vector<std::string> draws_paths;
    double level = 0.95;
    std::string out_dir = ".";
};

FitConfig parse_fit_config(const nlohmann::json& obj);
SimulateConfig parse_simulate_config(const nlohmann::json& obj);
CoverageConfig parse_coverage_config(const nlohmann::json& obj);
DecodeConfig parse_decode_config(const nlohmann::json& obj);
DiagnoseConfig parse_diagnose_config(const nlohmann::json& obj);
SummarizeConfig parse_summarize_config(const nlohmann::json& obj);

nlohmann::json fit_config_to_json(const FitConfig& cfg);

}  // namespace hsmm
