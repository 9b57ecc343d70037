#pragma once

#include <random>

#include "hsmm/model.hpp"

namespace hsmm {

// Duration log-pmf table over states x anchors x durations, stored as O(M n)
// per-anchor pieces so entry() is O(1). entry(j, t, d) reproduces
// ztp_logpmf(d, duration_rate(build_design(data, t), B[j])) exactly.
struct DurationGrid {
    long long d_max = 0;
    Mat lphi, phi, l1me;  // [M][n]
    Vec lgam;             // lgamma(d + 1) for d in 0..d_max
    long long clamp_events = 0;

    double entry(int j, long long t, long long d) const {
        return static_cast<double>(d) * lphi[j][t] - phi[j][t] - lgam[d] - l1me[j][t];
    }
    double max_phi() const;
};

DurationGrid duration_pmf_table(const ModelParams& params, const TimeSeriesData& data,
                                const DesignSpec& spec, long long d_max);

// Longest duration worth tracking: the 0.9999 quantile at the largest rate,
// capped by the longest session.
long long default_d_max(const ModelParams& params, const TimeSeriesData& data,
                        const DesignSpec& spec);

struct DecodeResult {
    Segmentation seg;
    double loglik = 0.0;
    double truncated_mass = 0.0;  // ZTP mass beyond d_max at the largest rate
    long long d_max = 0;          // grid size actually used
    long long clamp_events = 0;   // rate-exponent clamps while building the grid
};

// Joint MAP segmentation by segment-level dynamic programming, one session at
// a time. d_max = 0 selects the default rule. Ties resolve toward the path
// whose trailing (state, duration) pairs are smallest, comparing from the
// series end backwards.
DecodeResult viterbi_decode(const TimeSeriesData& data, const ModelParams& params,
                            const DesignSpec& spec, long long d_max = 0,
                            bool censor_last = false);

// Stochastic counterpart: exact draw from the conditional law of the
// segmentation given parameters (forward filtering, backward sampling).
Segmentation sample_states(const TimeSeriesData& data, const ModelParams& params,
                           const DesignSpec& spec, long long d_max,
                           bool censor_last, std::mt19937_64& rng);

}  // namespace hsmm
