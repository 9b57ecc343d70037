#pragma once

#include <random>

#include "hsmm/model.hpp"
#include "hsmm/sampler.hpp"

namespace hsmm {

// Ground-truth generator: segments drawn from the chain (initial law, then
// transitions), durations zero-truncated Poisson at covariate-driven rates,
// observations AR(1) within each segment with the state's stationary law.
struct SimScenario {
    int M = 2;
    long long n_target = 1000;
    int n_realizations = 100;
    double psi = 0.0;           // within-segment AR(1) coefficient
    bool ar_carryover = false;  // continue the recursion across segment changes
    int n_raw_cov = 0;          // iid standard normal covariate columns
    bool add_product_col = false;  // append elementwise product of cols 1 and 2
    ModelParams params;
    DesignSpec design;

    void validate() const;
};

struct SimResult {
    TimeSeriesData data;
    Segmentation seg;
};

SimResult simulate_realization(const SimScenario& sc, std::mt19937_64& rng);

// Intercept-only benchmark scenario: state means 0, 4, 8, ..., unit
// variances, mean segment length about 30.
SimScenario make_coverage_scenario(int M, double psi, long long n_target);

struct CoverageRow {
    double rate = 0.0;
    double coverage_mu = 0.0;      // fraction of true means inside 90% intervals
    double coverage_sigma2 = 0.0;
    double mc_stderr = 0.0;        // Monte Carlo error of coverage_mu
};

// Oracle-segmentation coverage study: for each realization and each rate, run
// a fixed-state chain and check whether the per-state 90% intervals cover the
// truth. Results are averaged over states and realizations.
std::vector<CoverageRow> run_coverage_experiment(const SimScenario& sc, const Vec& rates,
                                                 const Priors& priors,
                                                 const McmcConfig& config,
                                                 std::uint64_t seed, int threads);

}  // namespace hsmm
