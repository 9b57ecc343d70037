// Independent reference implementations used to cross-check the library.
// Everything here favors directness over speed: long double arithmetic,
// recurrences instead of log-space identities, exhaustive search instead
// of dynamic programming.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hsmm/decode.hpp"
#include "hsmm/dist.hpp"
#include "hsmm/model.hpp"

namespace testutil {

// pmf recurrence: p(1) = phi e^{-phi} / (1 - e^{-phi}), p(k) = p(k-1) phi / k.
inline long double ztp_pmf_direct(long long k, long double phi) {
    if (k < 1) return 0.0L;
    long double p = phi * std::exp(-phi) / (-std::expm1(-phi));
    for (long long i = 2; i <= k; ++i) p *= phi / static_cast<long double>(i);
    return p;
}

// log pmf through expm1 rather than the log1mexp split used by the library.
inline long double ztp_logpmf_direct(long long k, long double phi) {
    return static_cast<long double>(k) * std::log(phi) - std::lgamma(static_cast<long double>(k) + 1.0L) -
           std::log(std::expm1(phi));
}

// log P(K > k) by direct tail summation of the recurrence pmf. Summing the
// tail keeps deep tails exact where a head complement would cancel to the
// epsilon of the accumulator.
inline long double ztp_logsf_direct(long long k, long double phi) {
    long double p = phi * std::exp(-phi) / (-std::expm1(-phi));
    for (long long i = 1; i <= k; ++i) p *= phi / static_cast<long double>(i + 1);
    long double tail = 0.0L;
    for (long long i = k + 1;; ++i) {
        tail += p;
        p *= phi / static_cast<long double>(i + 1);
        if (static_cast<long double>(i + 1) > phi && p < tail * 1e-30L) break;
    }
    return std::log(tail);
}

inline long double norm_logpdf_direct(long double x, long double mean, long double var) {
    long double z = x - mean;
    return -0.5L * std::log(2.0L * 3.14159265358979323846264338327950288L * var) -
           z * z / (2.0L * var);
}

// Design row rebuilt from scratch: x0 at anchor 0, lagged instantaneous values,
// trailing window means over the points before the anchor.
inline std::vector<long double> design_row_direct(const hsmm::TimeSeriesData& data, long long t,
                                                  const hsmm::DesignSpec& spec) {
    std::vector<long double> feat(spec.n_cov);
    for (int c = 0; c < spec.n_cov; ++c) {
        bool win = !spec.windowed.empty() && spec.windowed[c];
        long double v;
        if (t == 0) {
            v = data.x0[c];
        } else if (win) {
            long long lo = std::max<long long>(0, t - spec.window);
            long double s = 0.0L;
            for (long long i = lo; i < t; ++i) s += data.X[i][c];
            v = s / static_cast<long double>(t - lo);
        } else {
            v = data.X[t - 1][c];
        }
        long double center = spec.center.empty() ? 0.0L : spec.center[c];
        long double scale = spec.scale.empty() ? 1.0L : spec.scale[c];
        feat[c] = (v - center) / scale;
    }
    std::vector<long double> row;
    row.push_back(1.0L);
    for (long double f : feat) row.push_back(f);
    if (spec.session_terms) {
        long double h = data.session[t];
        row.push_back(h);
        for (long double f : feat) row.push_back(f * h);
    }
    return row;
}

inline long double duration_rate_direct(const std::vector<long double>& row,
                                        const hsmm::Vec& beta) {
    long double eta = 0.0L;
    for (size_t i = 0; i < row.size(); ++i) eta += row[i] * static_cast<long double>(beta[i]);
    if (eta > 30.0L) eta = 30.0L;
    if (eta < -30.0L) eta = -30.0L;
    return std::exp(eta);
}

// Brute-force complete log likelihood, term by term in long double.
inline long double complete_loglik_direct(const hsmm::TimeSeriesData& data,
                                          const hsmm::Segmentation& seg,
                                          const hsmm::ModelParams& params,
                                          const hsmm::DesignSpec& spec,
                                          bool censor_last = false) {
    long double ll = 0.0L;
    long long Q = seg.n_segments();
    for (long long q = 0; q < Q; ++q) {
        long long a = seg.start(q);
        long long b = seg.boundaries[q];
        int j = seg.states[q];
        int s = data.session[a];
        bool first = (q == 0) || (data.session[seg.start(q - 1)] != s);
        bool last = (q == Q - 1) || (data.session[b] != s);
        double prob = first ? params.rho[s][j] : params.P[seg.states[q - 1]][j];
        if (prob <= 0.0) return -std::numeric_limits<long double>::infinity();
        ll += std::log(static_cast<long double>(prob));
        long double phi = duration_rate_direct(design_row_direct(data, a, spec), params.B[j]);
        if (censor_last && last) {
            if (seg.durations[q] > 1) ll += ztp_logsf_direct(seg.durations[q] - 1, phi);
        } else {
            ll += ztp_logpmf_direct(seg.durations[q], phi);
        }
        for (long long i = a; i < b; ++i)
            ll += norm_logpdf_direct(data.y[i], params.mu[j], params.sigma2[j]);
    }
    return ll;
}

// Exhaustive search over all valid segmentations, scored with the library's
// own likelihood terms so exact ties reduce to the decoder's preference key:
// scanning segments from the last one backward, smaller state wins, then
// shorter duration.
struct EnumBest {
    double score = -std::numeric_limits<double>::infinity();
    hsmm::Segmentation seg;
    double runner_up = -std::numeric_limits<double>::infinity();
    long long n_candidates = 0;
};

namespace detail {

using Key = std::vector<long long>;

inline Key pref_key(const hsmm::Segmentation& seg) {
    Key k;
    for (long long q = seg.n_segments() - 1; q >= 0; --q) {
        k.push_back(seg.states[q]);
        k.push_back(seg.durations[q]);
    }
    return k;
}

inline void enum_session(const hsmm::TimeSeriesData& data, const hsmm::ModelParams& params,
                         const hsmm::DesignSpec& spec, long long a, long long b,
                         long long d_max, bool censor_last, long long t,
                         hsmm::Segmentation& cur, double chain_ll, EnumBest& best,
                         const hsmm::Segmentation& done) {
    if (t == b) {
        hsmm::Segmentation full = done;
        long long off = full.boundaries.empty() ? 0 : full.boundaries.back();
        for (size_t q = 0; q < cur.states.size(); ++q) {
            full.states.push_back(cur.states[q]);
            full.durations.push_back(cur.durations[q]);
            full.boundaries.push_back(off + cur.boundaries[q]);
        }
        double emis = 0.0;
        for (size_t q = 0; q < cur.states.size(); ++q) {
            int j = cur.states[q];
            long long lo = a + (q == 0 ? 0 : cur.boundaries[q - 1]);
            long long hi = a + cur.boundaries[q];
            for (long long i = lo; i < hi; ++i)
                emis += hsmm::norm_logpdf(data.y[i], params.mu[j], params.sigma2[j]);
        }
        double score = chain_ll + emis;
        ++best.n_candidates;
        if (score > best.score) {
            best.runner_up = best.score;
            best.score = score;
            best.seg = full;
        } else if (score == best.score) {
            best.runner_up = score;
            if (pref_key(full) < pref_key(best.seg)) best.seg = full;
        } else if (score > best.runner_up) {
            best.runner_up = score;
        }
        return;
    }
    int prev = cur.states.empty() ? -1 : cur.states.back();
    int s = data.session[a];
    for (int j = 0; j < params.M; ++j) {
        if (j == prev) continue;
        double trans = cur.states.empty() ? hsmm::logz(params.rho[s][j])
                                          : hsmm::logz(params.P[prev][j]);
        if (trans == hsmm::NEG_INF) continue;
        hsmm::Vec row = hsmm::build_design(data, t, spec);
        double phi = hsmm::duration_rate(row, params.B[j]);
        for (long long d = 1; d <= std::min(d_max, b - t); ++d) {
            bool last = (t + d == b);
            double dur;
            if (censor_last && last)
                dur = d > 1 ? hsmm::ztp_logsf(d - 1, phi) : 0.0;
            else
                dur = hsmm::ztp_logpmf(d, phi);
            if (dur == hsmm::NEG_INF) continue;
            cur.states.push_back(j);
            cur.durations.push_back(d);
            cur.boundaries.push_back((t - a) + d);
            enum_session(data, params, spec, a, b, d_max, censor_last, t + d, cur,
                         chain_ll + trans + dur, best, done);
            cur.states.pop_back();
            cur.durations.pop_back();
            cur.boundaries.pop_back();
        }
    }
}

}  // namespace detail

inline EnumBest enumerate_decode(const hsmm::TimeSeriesData& data,
                                 const hsmm::ModelParams& params,
                                 const hsmm::DesignSpec& spec, long long d_max,
                                 bool censor_last = false) {
    EnumBest total;
    total.score = 0.0;
    total.runner_up = hsmm::NEG_INF;
    total.n_candidates = 1;
    for (auto [a, b] : data.session_ranges()) {
        EnumBest best;
        hsmm::Segmentation cur;
        detail::enum_session(data, params, spec, a, b, d_max, censor_last, a, cur, 0.0,
                             best, total.seg);
        if (best.n_candidates == 0)
            throw std::runtime_error("no feasible segmentation in enumeration");
        // Combining sessions: gaps add, the second-best overall differs from the
        // best in exactly one session, so the tightest per-session gap bounds it.
        double gap_here = best.score - best.runner_up;
        double gap_total = total.score - total.runner_up;
        total.runner_up = total.score + best.score - std::min(gap_here, gap_total);
        total.score += best.score;
        total.seg = best.seg;
        total.n_candidates *= best.n_candidates;
    }
    return total;
}

// Univariate potential scale reduction factor, direct formula.
inline double psrf_direct(const std::vector<std::vector<double>>& chains) {
    size_t m = chains.size();
    size_t L = chains[0].size();
    double grand = 0.0;
    std::vector<double> means(m, 0.0);
    for (size_t j = 0; j < m; ++j) {
        for (double x : chains[j]) means[j] += x;
        means[j] /= static_cast<double>(L);
        grand += means[j];
    }
    grand /= static_cast<double>(m);
    double B_over_L = 0.0;
    for (size_t j = 0; j < m; ++j)
        B_over_L += (means[j] - grand) * (means[j] - grand);
    B_over_L /= static_cast<double>(m - 1);
    double W = 0.0;
    for (size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (double x : chains[j]) s += (x - means[j]) * (x - means[j]);
        W += s / static_cast<double>(L - 1);
    }
    W /= static_cast<double>(m);
    double Lf = static_cast<double>(L);
    double mf = static_cast<double>(m);
    return (Lf - 1.0) / Lf + (mf + 1.0) / mf * B_over_L / W;
}

// Type-7 sample quantile on a copy.
inline double quantile_direct(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1.0) * p;
    size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - std::floor(h)) * (v[lo + 1] - v[lo]);
}

// One-sample Kolmogorov-Smirnov statistic against a cdf.
template <typename Cdf>
double ks_statistic(std::vector<double> draws, Cdf cdf) {
    std::sort(draws.begin(), draws.end());
    double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (size_t i = 0; i < draws.size(); ++i) {
        double f = cdf(draws[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

// Random valid model instances for oracle comparisons.
struct RandomInstance {
    hsmm::TimeSeriesData data;
    hsmm::ModelParams params;
    hsmm::DesignSpec spec;
    hsmm::Segmentation seg;
};

inline RandomInstance make_random_instance(std::mt19937_64& rng, long long n_max = 12,
                                           int M_max = 3, bool covariates = true,
                                           int max_sessions = 2) {
    std::uniform_int_distribution<long long> nd(2, n_max);
    std::uniform_int_distribution<int> Md(1, M_max);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);

    RandomInstance inst;
    long long n = nd(rng);
    int M = Md(rng);
    int S = 1 + static_cast<int>(u(rng) * max_sessions) % max_sessions;
    int r = covariates ? 1 + static_cast<int>(u(rng) * 2.0) : 0;

    inst.data.y.resize(n);
    inst.data.X.assign(n, hsmm::Vec(r));
    inst.data.session.resize(n);
    inst.data.x0.assign(r, 0.0);
    for (int c = 0; c < r; ++c) inst.data.x0[c] = g(rng);
    long long split = S == 2 ? 1 + static_cast<long long>(u(rng) * static_cast<double>(n - 1)) : n;
    for (long long t = 0; t < n; ++t) {
        inst.data.y[t] = 3.0 * g(rng);
        for (int c = 0; c < r; ++c) inst.data.X[t][c] = g(rng);
        inst.data.session[t] = t < split ? 0 : 1;
    }

    inst.spec.n_cov = r;
    inst.spec.session_terms = u(rng) < 0.5;
    if (r > 0 && u(rng) < 0.5) {
        inst.spec.windowed.assign(r, 0);
        inst.spec.windowed[0] = 1;
        inst.spec.window = 2 + static_cast<long long>(u(rng) * 3.0);
    }

    inst.params.M = M;
    inst.params.mu.resize(M);
    inst.params.sigma2.resize(M);
    inst.params.B.assign(M, hsmm::Vec(inst.spec.cols()));
    for (int j = 0; j < M; ++j) {
        inst.params.mu[j] = 4.0 * g(rng);
        inst.params.sigma2[j] = 0.3 + 2.0 * u(rng);
        inst.params.B[j][0] = 1.2 * g(rng);
        for (int c = 1; c < inst.spec.cols(); ++c) inst.params.B[j][c] = 0.4 * g(rng);
    }
    int n_sessions = inst.data.n_sessions();
    inst.params.rho.assign(n_sessions, hsmm::Vec(M));
    for (int s = 0; s < n_sessions; ++s) {
        double tot = 0.0;
        for (int j = 0; j < M; ++j) {
            inst.params.rho[s][j] = 0.05 + u(rng);
            tot += inst.params.rho[s][j];
        }
        for (int j = 0; j < M; ++j) inst.params.rho[s][j] /= tot;
    }
    inst.params.P.assign(M, hsmm::Vec(M, 0.0));
    for (int j = 0; j < M; ++j) {
        double tot = 0.0;
        for (int k = 0; k < M; ++k) {
            if (k == j) continue;
            inst.params.P[j][k] = 0.05 + u(rng);
            tot += inst.params.P[j][k];
        }
        for (int k = 0; k < M; ++k)
            if (k != j && M > 1) inst.params.P[j][k] /= tot;
    }

    // Random valid segmentation: split each session, label with state changes.
    std::vector<int> states(n);
    for (auto [a, b] : inst.data.session_ranges()) {
        long long t = a;
        int prev = -1;
        while (t < b) {
            int j = static_cast<int>(u(rng) * M) % M;
            if (M > 1)
                while (j == prev) j = static_cast<int>(u(rng) * M) % M;
            long long d = 1 + static_cast<long long>(u(rng) * 3.0);
            d = std::min(d, b - t);
            for (long long i = t; i < t + d; ++i) states[i] = j;
            prev = j;
            t += d;
        }
    }
    inst.seg = hsmm::Segmentation::from_states(states, inst.data.session);
    return inst;
}

}  // namespace testutil
