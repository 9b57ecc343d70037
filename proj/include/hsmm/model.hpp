#pragma once

#include <cstdint>
#include <utility>

#include "hsmm/common.hpp"

namespace hsmm {

// Observed series with covariates. Rows are time-ordered; session ids must be
// 0..S-1 in consecutive runs. x0 holds pre-series covariate values used by
// segments anchored at t = 0.
struct TimeSeriesData {
    Vec y;
    Mat X;
    std::vector<int> session;
    Vec x0;

    long long n() const { return static_cast<long long>(y.size()); }
    int r() const { return static_cast<int>(x0.size()); }
    int n_sessions() const { return session.empty() ? 0 : session.back() + 1; }
    std::vector<std::pair<long long, long long>> session_ranges() const;
    void validate() const;
};

// Maps raw covariates to a duration design row:
//   (1, f_1..f_r, h, f_1*h..f_r*h)
// where f_c is the standardized covariate (trailing-window mean when flagged,
// value at the last pre-segment row otherwise) and h is the session ordinal.
// The session block is dropped when session_terms is false.
struct DesignSpec {
    int n_cov = 0;
    long long window = 20;
    std::vector<std::uint8_t> windowed;  // per covariate; empty means none
    bool session_terms = true;
    Vec center;  // empty means all zeros
    Vec scale;   // empty means all ones

    int cols() const { return 1 + n_cov + (session_terms ? 1 + n_cov : 0); }
    void validate() const;
};

// Segment-level description of a state path: states[q] held for durations[q]
// steps ending at boundaries[q] (cumulative counts). Adjacent segments within
// a session carry distinct states; a new session may restart in any state.
struct Segmentation {
    std::vector<int> states;
    std::vector<long long> durations;
    std::vector<long long> boundaries;

    long long n_segments() const { return static_cast<long long>(states.size()); }
    long long start(long long q) const { return q == 0 ? 0 : boundaries[q - 1]; }
    std::vector<int> expand() const;
    void validate(const TimeSeriesData& data, int M) const;

    static Segmentation from_states(const std::vector<int>& s,
                                    const std::vector<int>& session);
};

struct ModelParams {
    int M = 0;
    Vec mu;
    Vec sigma2;
    Mat rho;  // one row per session
    Mat P;    // zero diagonal
    Mat B;    // M x design cols

    void validate(int n_sessions, int design_cols) const;
};

struct Priors {
    double theta_mu = 0.0;
    double lambda2_mu = 10000.0;
    double ig_shape = 3.0;
    double ig_scale = 3.0;
    double rho_conc = 1.0;
    double trans_conc = 1.0;
    double beta_mean = 0.0;
    double beta_var = 10000.0;

    void validate() const;
};

// Design row for a segment starting after t observations; t = 0 reads x0.
Vec build_design(const TimeSeriesData& data, long long t, const DesignSpec& spec);
// All n anchor rows at once.
Mat design_matrix(const TimeSeriesData& data, const DesignSpec& spec);

// exp(<row, beta>) with the exponent clamped to [-30, 30]; clamp_events is
// incremented when the clamp binds.
double duration_rate(const Vec& row, const Vec& beta, long long* clamp_events = nullptr);

// Trailing-window mean, inclusive of position t, truncated at the start.
Vec rolling_mean(const Vec& x, long long window);

// Gaussian emission term. Optional mask (size n, nonzero = keep) restricts to
// a subset of time points.
double emission_loglik(const TimeSeriesData& data, const Segmentation& seg,
                       const Vec& mu, const Vec& sigma2,
                       const std::vector<std::uint8_t>* mask = nullptr);

// Initial-state, duration, and transition terms. Sessions restart from rho
// with no transition factor across the break. With censor_last, each
// session's final segment contributes a survival term instead of a pmf.
// Structurally impossible paths yield -inf, not an error.
double chain_loglik(const Segmentation& seg, const ModelParams& params,
                    const TimeSeriesData& data, const DesignSpec& spec,
                    bool censor_last = false, long long* clamp_events = nullptr);

double complete_loglik(const TimeSeriesData& data, const Segmentation& seg,
                       const ModelParams& params, const DesignSpec& spec,
                       bool censor_last = false);

}  // namespace hsmm
