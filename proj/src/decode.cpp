#include "hsmm/decode.hpp"

#include <algorithm>
#include <cmath>

#include "hsmm/dist.hpp"

namespace hsmm {

namespace {

// Censored tail weight for a session-final segment: P(K >= d).
double censored_term(double phi, long long d) {
    return d > 1 ? ztp_logsf(d - 1, phi) : 0.0;
}

Mat log_matrix(const Mat& m) {
    Mat out(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
        out[i].resize(m[i].size());
        for (size_t j = 0; j < m[i].size(); ++j) out[i][j] = logz(m[i][j]);
    }
    return out;
}

// Per-state prefix sums of emission log-densities; pre[j][t] covers y[0..t).
Mat emission_prefix(const TimeSeriesData& data, const Vec& mu, const Vec& sigma2) {
    int M = static_cast<int>(mu.size());
    long long n = data.n();
    Mat pre(M, Vec(n + 1, 0.0));
    for (int j = 0; j < M; ++j)
        for (long long t = 0; t < n; ++t)
            pre[j][t + 1] = pre[j][t] + norm_logpdf(data.y[t], mu[j], sigma2[j]);
    return pre;
}

int sample_cat_log(const Vec& logw, std::mt19937_64& rng) {
    double lz = logsumexp(logw);
    if (lz == NEG_INF) throw std::runtime_error("categorical draw over zero-mass weights");
    double u = runif(rng);
    double cum = 0.0;
    int last_live = -1;
    for (size_t i = 0; i < logw.size(); ++i) {
        if (logw[i] == NEG_INF) continue;
        last_live = static_cast<int>(i);
        cum += std::exp(logw[i] - lz);
        if (u <= cum) return last_live;
    }
    return last_live;
}

}  // namespace

double DurationGrid::max_phi() const {
    double m = 0.0;
    for (const Vec& row : phi)
        for (double v : row) m = std::max(m, v);
    return m;
}

DurationGrid duration_pmf_table(const ModelParams& params, const TimeSeriesData& data,
                                const DesignSpec& spec, long long d_max) {
    data.validate();
    params.validate(data.n_sessions(), spec.cols());
    if (d_max < 1) throw std::invalid_argument("d_max must be at least 1");
    long long n = data.n();
    int M = params.M;
    DurationGrid g;
    g.d_max = d_max;
    g.lphi.assign(M, Vec(n));
    g.phi.assign(M, Vec(n));
    g.l1me.assign(M, Vec(n));
    g.lgam.resize(d_max + 1);
    for (long long d = 0; d <= d_max; ++d) g.lgam[d] = std::lgamma(static_cast<double>(d) + 1.0);
    Mat D = design_matrix(data, spec);
    for (int j = 0; j < M; ++j) {
        for (long long t = 0; t < n; ++t) {
            double phi = duration_rate(D[t], params.B[j], &g.clamp_events);
            g.phi[j][t] = phi;
            g.lphi[j][t] = std::log(phi);
            g.l1me[j][t] = log1mexp(phi);
        }
    }
    return g;
}

long long default_d_max(const ModelParams& params, const TimeSeriesData& data,
                        const DesignSpec& spec) {
    data.validate();
    params.validate(data.n_sessions(), spec.cols());
    Mat D = design_matrix(data, spec);
    double phi_max = 0.0;
    long long dummy = 0;
    for (int j = 0; j < params.M; ++j)
        for (long long t = 0; t < data.n(); ++t)
            phi_max = std::max(phi_max, duration_rate(D[t], params.B[j], &dummy));
    long long longest = 0;
    for (auto [a, b] : data.session_ranges()) longest = std::max(longest, b - a);
    return std::max<long long>(1, ztp_quantile(0.9999, phi_max, longest));
}

DecodeResult viterbi_decode(const TimeSeriesData& data, const ModelParams& params,
                            const DesignSpec& spec, long long d_max, bool censor_last) {
    data.validate();
    params.validate(data.n_sessions(), spec.cols());
    if (d_max == 0) d_max = default_d_max(params, data, spec);
    DurationGrid grid = duration_pmf_table(params, data, spec, d_max);
    Mat pre = emission_prefix(data, params.mu, params.sigma2);
    Mat lnP = log_matrix(params.P);
    int M = params.M;

    DecodeResult res;
    res.loglik = 0.0;
    res.truncated_mass = 1.0 - ztp_cdf(d_max, grid.max_phi());
    res.d_max = d_max;
    res.clamp_events = grid.clamp_events;

    std::vector<int> all_states;
    std::vector<long long> all_durs;
    for (auto [a, b] : data.session_ranges()) {
        long long L = b - a;
        int s = data.session[a];
        // delta[t][j]: best log-score of y[a..a+t) ending a segment at t in
        // state j. Backpointers store the segment length and previous state
        // (-1 when the segment opens the session).
        Mat delta(L + 1, Vec(M, NEG_INF));
        std::vector<std::vector<long long>> bp_d(L + 1, std::vector<long long>(M, -1));
        std::vector<std::vector<int>> bp_k(L + 1, std::vector<int>(M, -2));
        // best_in[t][j]: max over k != j of delta[t][k] + ln P[k][j].
        Mat best_in(L + 1, Vec(M, NEG_INF));
        std::vector<std::vector<int>> arg_in(L + 1, std::vector<int>(M, -2));

        for (long long t = 1; t <= L; ++t) {
            for (int j = 0; j < M; ++j) {
                double best = NEG_INF;
                long long bd = -1;
                int bk = -2;
                long long dmax_t = std::min(d_max, t);
                for (long long d = 1; d <= dmax_t; ++d) {
                    long long t0 = t - d;
                    double base;
                    int k;
                    if (t0 == 0) {
                        base = logz(params.rho[s][j]);
                        k = -1;
                    } else {
                        base = best_in[t0][j];
                        k = arg_in[t0][j];
                    }
                    if (base == NEG_INF) continue;
                    double dur = (censor_last && t == L)
                                     ? censored_term(grid.phi[j][a + t0], d)
                                     : grid.entry(j, a + t0, d);
                    double cand = base + dur + (pre[j][a + t] - pre[j][a + t0]);
                    if (cand > best) {
                        best = cand;
                        bd = d;
                        bk = k;
                    }
                }
                delta[t][j] = best;
                bp_d[t][j] = bd;
                bp_k[t][j] = bk;
            }
            if (t < L) {
                for (int j = 0; j < M; ++j) {
                    double best = NEG_INF;
                    int bk = -2;
                    for (int k = 0; k < M; ++k) {
                        if (k == j) continue;
                        double cand = delta[t][k] + lnP[k][j];
                        if (cand > best) {
                            best = cand;
                            bk = k;
                        }
                    }
                    best_in[t][j] = best;
                    arg_in[t][j] = bk;
                }
            }
        }

        double best = NEG_INF;
        int bj = -1;
        for (int j = 0; j < M; ++j) {
            if (delta[L][j] > best) {
                best = delta[L][j];
                bj = j;
            }
        }
        if (bj < 0)
            throw std::runtime_error(
                "no admissible segmentation for session " + std::to_string(s) +
                ": d_max=" + std::to_string(d_max) + " against session length " +
                std::to_string(L) + " with M=" + std::to_string(M) +
                " states (zero-probability initial states or transitions can also bind)");
        res.loglik += best;

        std::vector<int> sts;
        std::vector<long long> durs;
        long long t = L;
        int j = bj;
        while (t > 0) {
            long long d = bp_d[t][j];
            int k = bp_k[t][j];
            sts.push_back(j);
            durs.push_back(d);
            t -= d;
            j = k;
        }
        std::reverse(sts.begin(), sts.end());
        std::reverse(durs.begin(), durs.end());
        all_states.insert(all_states.end(), sts.begin(), sts.end());
        all_durs.insert(all_durs.end(), durs.begin(), durs.end());
    }

    res.seg.states = std::move(all_states);
    res.seg.durations = std::move(all_durs);
    res.seg.boundaries.resize(res.seg.durations.size());
    long long cum = 0;
    for (size_t q = 0; q < res.seg.durations.size(); ++q) {
        cum += res.seg.durations[q];
        res.seg.boundaries[q] = cum;
    }
    res.seg.validate(data, M);
    return res;
}

Segmentation sample_states(const TimeSeriesData& data, const ModelParams& params,
                           const DesignSpec& spec, long long d_max,
                           bool censor_last, std::mt19937_64& rng) {
    data.validate();
    params.validate(data.n_sessions(), spec.cols());
    if (d_max == 0) d_max = default_d_max(params, data, spec);
    DurationGrid grid = duration_pmf_table(params, data, spec, d_max);
    Mat pre = emission_prefix(data, params.mu, params.sigma2);
    Mat lnP = log_matrix(params.P);
    int M = params.M;

    std::vector<int> all_states;
    std::vector<long long> all_durs;
    for (auto [a, b] : data.session_ranges()) {
        long long L = b - a;
        int s = data.session[a];
        // alpha[t][j]: log-mass of y[a..a+t) with a segment ending at t in j.
        Mat alpha(L + 1, Vec(M, NEG_INF));
        Mat into(L + 1, Vec(M, NEG_INF));  // logsumexp over k != j of alpha + lnP
        for (long long t = 1; t <= L; ++t) {
            for (int j = 0; j < M; ++j) {
                Vec terms;
                long long dmax_t = std::min(d_max, t);
                for (long long d = 1; d <= dmax_t; ++d) {
                    long long t0 = t - d;
                    double base = t0 == 0 ? logz(params.rho[s][j]) : into[t0][j];
                    if (base == NEG_INF) continue;
                    double dur = (censor_last && t == L)
                                     ? censored_term(grid.phi[j][a + t0], d)
                                     : grid.entry(j, a + t0, d);
                    terms.push_back(base + dur + (pre[j][a + t] - pre[j][a + t0]));
                }
                alpha[t][j] = terms.empty() ? NEG_INF : logsumexp(terms);
            }
            if (t < L) {
                for (int j = 0; j < M; ++j) {
                    Vec terms;
                    for (int k = 0; k < M; ++k)
                        if (k != j && alpha[t][k] != NEG_INF && lnP[k][j] != NEG_INF)
                            terms.push_back(alpha[t][k] + lnP[k][j]);
                    into[t][j] = terms.empty() ? NEG_INF : logsumexp(terms);
                }
            }
        }

        if (logsumexp(alpha[L]) == NEG_INF)
            throw std::runtime_error("no admissible segmentation for session " +
                                     std::to_string(s) + " (d_max=" + std::to_string(d_max) + ")");

        std::vector<int> sts;
        std::vector<long long> durs;
        long long t = L;
        int j = sample_cat_log(alpha[L], rng);
        while (t > 0) {
            Vec dw;  // weight of each admissible duration d = 1..dmax_t
            long long dmax_t = std::min(d_max, t);
            for (long long d = 1; d <= dmax_t; ++d) {
                long long t0 = t - d;
                double base = t0 == 0 ? logz(params.rho[s][j]) : into[t0][j];
                double dur = (censor_last && t == L)
                                 ? censored_term(grid.phi[j][a + t0], d)
                                 : grid.entry(j, a + t0, d);
                dw.push_back(base == NEG_INF ? NEG_INF
                                             : base + dur + (pre[j][a + t] - pre[j][a + t0]));
            }
            long long d = 1 + sample_cat_log(dw, rng);
            sts.push_back(j);
            durs.push_back(d);
            long long t0 = t - d;
            if (t0 > 0) {
                Vec kw(M, NEG_INF);
                for (int k = 0; k < M; ++k)
                    if (k != j) kw[k] = alpha[t0][k] + lnP[k][j];
                j = sample_cat_log(kw, rng);
            }
            t = t0;
        }
        std::reverse(sts.begin(), sts.end());
        std::reverse(durs.begin(), durs.end());
        all_states.insert(all_states.end(), sts.begin(), sts.end());
        all_durs.insert(all_durs.end(), durs.begin(), durs.end());
    }

    Segmentation seg;
    seg.states = std::move(all_states);
    seg.durations = std::move(all_durs);
    seg.boundaries.resize(seg.durations.size());
    long long cum = 0;
    for (size_t q = 0; q < seg.durations.size(); ++q) {
        cum += seg.durations[q];
        seg.boundaries[q] = cum;
    }
    seg.validate(data, M);
    return seg;
}

}  // namespace hsmm
