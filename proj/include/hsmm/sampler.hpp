#pragma once

#include <functional>
#include <optional>

#include "hsmm/decode.hpp"
#include "hsmm/model.hpp"

namespace hsmm {

struct McmcConfig {
    long long n_iter = 100000;
    long long n_adapt = 30000;  // adaptation draws, discarded
    long long thin = 1;
    double subsample_rate = 1.0;
    std::uint64_t seed = 0;
    long long d_max = 0;  // 0 = automatic per iteration
    bool censor_last = false;
    bool stochastic_states = false;  // conditional draw instead of MAP decode
    bool sigma2_uses_prev_mu = false;
    double kappa0 = 0.1;
    double target_accept = 0.234;
    long long progress_every = 0;
    int threads = 1;
    // Block toggles. Disabling one block never shifts the draws any other
    // block consumes (each has its own RNG substream).
    bool update_rho = true;
    bool update_trans = true;
    bool update_beta = true;
    bool update_states = true;
    bool update_mu = true;
    bool update_sigma2 = true;

    void validate() const;
};

struct DrawRecord {
    long long iter = 0;  // 1-based position in the full run
    Vec mu, sigma2;
    Mat rho, P, B;
    Vec kappa;        // proposal scales at record time
    Vec accept_rate;  // cumulative per-state acceptance
    double loglik = 0.0;
    long long n_segments = 0;
    Vec phi_mean, phi_min, phi_max;  // duration rates over each state's segments
};

struct PosteriorDraws {
    int M = 0;
    int n_sessions = 1;
    int design_cols = 1;
    std::vector<DrawRecord> records;
    Segmentation final_seg;
    Vec kappa;
    Vec accept_rate;
    long long clamp_events = 0;
    double max_truncated_mass = 0.0;
    long long d_max_used = 0;
};

using ProgressFn =
    std::function<void(long long iter, double loglik, const Vec& accept_rate)>;

// Initial-state counts per session and within-session transition counts.
Mat count_initial(const Segmentation& seg, const TimeSeriesData& data, int M);
Mat count_transitions(const Segmentation& seg, const TimeSeriesData& data, int M);

void update_rho(ModelParams& params, const Segmentation& seg, const TimeSeriesData& data,
                const Priors& priors, std::mt19937_64& rng);
void update_transitions(ModelParams& params, const Segmentation& seg,
                        const TimeSeriesData& data, const Priors& priors,
                        std::mt19937_64& rng);

// Log Metropolis ratio for replacing one state's duration coefficients:
// zero-truncated Poisson terms over that state's segments plus the Gaussian
// prior difference. Proposals are symmetric, so no proposal correction.
double beta_log_accept_ratio(const TimeSeriesData& data, const Segmentation& seg,
                             const Mat& D, int state, const Vec& beta_old,
                             const Vec& beta_new, const Priors& priors,
                             bool censor_last = false, long long* clamp_events = nullptr);

// Simple random sample of round(rate * n) indices (at least 1), ascending.
// rate = 1 returns the identity and consumes no randomness.
std::vector<long long> subsample_indices(long long n, double rate, std::mt19937_64& rng);

// Conjugate posterior (mean, variance) for one state's emission mean.
std::pair<double, double> mu_full_conditional(double sum_y, long long n_j,
                                              double sigma2_j, const Priors& priors);

// Permutation that sorts mu ascending (ties keep original order);
// perm[new_label] = old_label.
std::vector<int> ascending_mean_order(const Vec& mu);
void relabel_states(ModelParams& params, Segmentation& seg, Vec& kappa,
                    std::vector<long long>& accepted, std::vector<long long>& proposed,
                    const std::vector<int>& perm);

// Full Metropolis-within-Gibbs run. Optional init_seg fixes the starting
// segmentation (and seeds emission moments from it); otherwise the start is a
// deterministic quantile-based guess refined by a MAP decode.
PosteriorDraws run_chain(const TimeSeriesData& data, const DesignSpec& spec, int M,
                         const Priors& priors, const McmcConfig& config,
                         const Segmentation* init_seg = nullptr,
                         const ProgressFn& progress = nullptr);

// Oracle-segmentation protocol: states pinned at truth, only emission
// parameters move. Equivalent to run_chain with non-emission blocks disabled.
PosteriorDraws run_fixed_state_chain(const TimeSeriesData& data, const DesignSpec& spec,
                                     const Priors& priors, const McmcConfig& config,
                                     const Segmentation& truth);

}  // namespace hsmm
