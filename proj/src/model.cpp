#include "hsmm/model.hpp"

#include <algorithm>
#include <cmath>

#include "hsmm/dist.hpp"

namespace hsmm {

namespace {

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<std::pair<long long, long long>> TimeSeriesData::session_ranges() const {
    std::vector<std::pair<long long, long long>> out;
    long long start = 0;
    for (long long t = 1; t <= n(); ++t) {
        if (t == n() || session[t] != session[start]) {
            out.emplace_back(start, t);
            start = t;
        }
    }
    return out;
}

void TimeSeriesData::validate() const {
    if (y.empty()) throw DataError("series is empty");
    long long nn = n();
    if (static_cast<long long>(X.size()) != nn)
        throw DataError("covariate matrix row count does not match series length");
    if (static_cast<long long>(session.size()) != nn)
        throw DataError("session vector length does not match series length");
    size_t rr = x0.size();
    for (long long t = 0; t < nn; ++t)
        if (X[t].size() != rr)
            throw DataError("covariate row " + std::to_string(t) + " has wrong width");
    if (session[0] != 0) throw DataError("session ids must start at 0");
    for (long long t = 1; t < nn; ++t) {
        int step = session[t] - session[t - 1];
        if (step != 0 && step != 1)
            throw DataError("session ids must be consecutive and non-decreasing (row " +
                            std::to_string(t) + ")");
    }
    if (!all_finite(y)) throw DataError("series contains non-finite values");
    if (!all_finite(x0)) throw DataError("x0 contains non-finite values");
    for (long long t = 0; t < nn; ++t)
        if (!all_finite(X[t]))
            throw DataError("covariates contain non-finite values (row " + std::to_string(t) + ")");
}

void DesignSpec::validate() const {
    if (n_cov < 0) throw ConfigError("covariate count must be nonnegative", "design.n_cov");
    if (window < 1) throw ConfigError("window must be at least 1", "design.window");
    if (!windowed.empty() && static_cast<int>(windowed.size()) != n_cov)
        throw ConfigError("windowed flags must match covariate count", "design.windowed");
    if (!center.empty() && static_cast<int>(center.size()) != n_cov)
        throw ConfigError("center must match covariate count", "design.center");
    if (!scale.empty() && static_cast<int>(scale.size()) != n_cov)
        throw ConfigError("scale must match covariate count", "design.scale");
    for (double s : scale)
        if (!(s > 0.0)) throw ConfigError("scale entries must be positive", "design.scale");
}

std::vector<int> Segmentation::expand() const {
    std::vector<int> out;
    if (boundaries.empty()) return out;
    out.reserve(boundaries.back());
    for (size_t q = 0; q < states.size(); ++q)
        out.insert(out.end(), durations[q], states[q]);
    return out;
}

void Segmentation::validate(const TimeSeriesData& data, int M) const {
    long long Q = n_segments();
    if (Q == 0) throw DataError("segmentation is empty");
    if (static_cast<long long>(durations.size()) != Q ||
        static_cast<long long>(boundaries.size()) != Q)
        throw DataError("segmentation fields have mismatched lengths");
    long long cum = 0;
    for (long long q = 0; q < Q; ++q) {
        if (durations[q] < 1) throw DataError("segment durations must be at least 1");
        cum += durations[q];
        if (boundaries[q] != cum) throw DataError("segment boundaries are not cumulative sums");
        if (states[q] < 0 || states[q] >= M)
            throw DataError("segment state out of range");
    }
    if (cum != data.n()) throw DataError("segment durations do not sum to series length");
    for (long long q = 0; q < Q; ++q) {
        long long a = start(q), b = boundaries[q];
        if (data.session[a] != data.session[b - 1])
            throw DataError("segment " + std::to_string(q) + " straddles a session break");
        if (q > 0 && data.session[a] == data.session[a - 1] && states[q] == states[q - 1])
            throw DataError("consecutive segments within a session share a state");
    }
}

Segmentation Segmentation::from_states(const std::vector<int>& s,
                                       const std::vector<int>& session) {
    if (s.empty() || s.size() != session.size())
        throw DataError("state path and session vector must be equal nonempty lengths");
    Segmentation seg;
    long long run = 1;
    for (size_t t = 1; t <= s.size(); ++t) {
        if (t == s.size() || s[t] != s[t - 1] || session[t] != session[t - 1]) {
            seg.states.push_back(s[t - 1]);
            seg.durations.push_back(run);
            seg.boundaries.push_back(static_cast<long long>(t));
            run = 1;
        } else {
            ++run;
        }
    }
    return seg;
}

void ModelParams::validate(int n_sessions, int design_cols) const {
    if (M < 1) throw DataError("state count must be at least 1");
    auto check_len = [&](const Vec& v, const char* what) {
        if (static_cast<int>(v.size()) != M)
            throw DataError(std::string(what) + " must have one entry per state");
    };
    check_len(mu, "mu");
    check_len(sigma2, "sigma2");
    if (!all_finite(mu)) throw DataError("mu contains non-finite values");
    for (double s2 : sigma2)
        if (!std::isfinite(s2) || s2 <= 0.0) throw DataError("sigma2 entries must be positive");
    if (static_cast<int>(rho.size()) != n_sessions)
        throw DataError("rho must have one row per session");
    for (const Vec& row : rho) {
        if (static_cast<int>(row.size()) != M) throw DataError("rho row has wrong width");
        double sum = 0.0;
        for (double v : row) {
            if (!(v >= 0.0)) throw DataError("rho entries must be nonnegative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-8) throw DataError("rho rows must sum to 1");
    }
    if (static_cast<int>(P.size()) != M) throw DataError("transition matrix must be M x M");
    for (int j = 0; j < M; ++j) {
        if (static_cast<int>(P[j].size()) != M) throw DataError("transition row has wrong width");
        if (P[j][j] != 0.0) throw DataError("self-transitions are forbidden");
        double sum = 0.0;
        for (double v : P[j]) {
            if (!(v >= 0.0)) throw DataError("transition entries must be nonnegative");
            sum += v;
        }
        // A single-state model has no transitions and keeps an all-zero row.
        if (M > 1 && std::abs(sum - 1.0) > 1e-8)
            throw DataError("transition rows must sum to 1");
    }
    if (static_cast<int>(B.size()) != M) throw DataError("B must have one row per state");
    for (const Vec& row : B) {
        if (static_cast<int>(row.size()) != design_cols)
            throw DataError("B row width does not match design columns");
        if (!all_finite(row)) throw DataError("B contains non-finite values");
    }
}

void Priors::validate() const {
    if (!(lambda2_mu > 0.0)) throw ConfigError("mean prior variance must be positive", "priors.lambda2_mu");
    if (!(ig_shape > 0.0)) throw ConfigError("variance prior shape must be positive", "priors.ig_shape");
    if (!(ig_scale > 0.0)) throw ConfigError("variance prior scale must be positive", "priors.ig_scale");
    if (!(rho_conc > 0.0)) throw ConfigError("rho concentration must be positive", "priors.rho_conc");
    if (!(trans_conc > 0.0)) throw ConfigError("transition concentration must be positive", "priors.trans_conc");
    if (!(beta_var > 0.0)) throw ConfigError("beta prior variance must be positive", "priors.beta_var");
    if (!std::isfinite(theta_mu)) throw ConfigError("mean prior location must be finite", "priors.theta_mu");
    if (!std::isfinite(beta_mean)) throw ConfigError("beta prior mean must be finite", "priors.beta_mean");
}

Vec build_design(const TimeSeriesData& data, long long t, const DesignSpec& spec) {
    if (t < 0 || t >= data.n())
        throw std::out_of_range("design anchor " + std::to_string(t) + " outside series");
    if (static_cast<int>(data.x0.size()) != spec.n_cov)
        throw DataError("design spec covariate count does not match data");
    int r = spec.n_cov;
    Vec feat(r);
    for (int c = 0; c < r; ++c) {
        bool win = !spec.windowed.empty() && spec.windowed[c];
        double v;
        if (t == 0) {
            v = data.x0[c];
        } else if (win) {
            long long lo = std::max<long long>(0, t - spec.window);
            double s = 0.0;
            for (long long i = lo; i < t; ++i) s += data.X[i][c];
            v = s / static_cast<double>(t - lo);
        } else {
            v = data.X[t - 1][c];
        }
        double center = spec.center.empty() ? 0.0 : spec.center[c];
        double scale = spec.scale.empty() ? 1.0 : spec.scale[c];
        feat[c] = (v - center) / scale;
    }
    Vec row;
    row.reserve(spec.cols());
    row.push_back(1.0);
    row.insert(row.end(), feat.begin(), feat.end());
    if (spec.session_terms) {
        double h = static_cast<double>(data.session[t]);
        row.push_back(h);
        for (int c = 0; c < r; ++c) row.push_back(feat[c] * h);
    }
    return row;
}

Mat design_matrix(const TimeSeriesData& data, const DesignSpec& spec) {
    Mat D(data.n());
    for (long long t = 0; t < data.n(); ++t) D[t] = build_design(data, t, spec);
    return D;
}

double duration_rate(const Vec& row, const Vec& beta, long long* clamp_events) {
    if (row.size() != beta.size())
        throw std::invalid_argument("design row and coefficient lengths differ");
    double eta = 0.0;
    for (size_t i = 0; i < row.size(); ++i) {
        if (!std::isfinite(row[i]) || !std::isfinite(beta[i]))
            throw std::domain_error("duration rate inputs must be finite");
        eta += row[i] * beta[i];
    }
    if (eta > 30.0) {
        eta = 30.0;
        if (clamp_events) ++*clamp_events;
    } else if (eta < -30.0) {
        eta = -30.0;
        if (clamp_events) ++*clamp_events;
    }
    return std::exp(eta);
}

Vec rolling_mean(const Vec& x, long long window) {
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    Vec out(x.size());
    for (long long t = 0; t < static_cast<long long>(x.size()); ++t) {
        long long lo = std::max<long long>(0, t - window + 1);
        double s = 0.0;
        for (long long i = lo; i <= t; ++i) s += x[i];
        out[t] = s / static_cast<double>(t - lo + 1);
    }
    return out;
}

double emission_loglik(const TimeSeriesData& data, const Segmentation& seg,
                       const Vec& mu, const Vec& sigma2,
                       const std::vector<std::uint8_t>* mask) {
    seg.validate(data, static_cast<int>(mu.size()));
    if (mu.size() != sigma2.size()) throw DataError("mu and sigma2 lengths differ");
    if (mask && static_cast<long long>(mask->size()) != data.n())
        throw DataError("mask length does not match series length");
    double ll = 0.0;
    for (long long q = 0; q < seg.n_segments(); ++q) {
        int j = seg.states[q];
        for (long long i = seg.start(q); i < seg.boundaries[q]; ++i) {
            if (mask && !(*mask)[i]) continue;
            ll += norm_logpdf(data.y[i], mu[j], sigma2[j]);
        }
    }
    return ll;
}

double chain_loglik(const Segmentation& seg, const ModelParams& params,
                    const TimeSeriesData& data, const DesignSpec& spec,
                    bool censor_last, long long* clamp_events) {
    seg.validate(data, params.M);
    params.validate(data.n_sessions(), spec.cols());
    double ll = 0.0;
    long long Q = seg.n_segments();
    for (long long q = 0; q < Q; ++q) {
        long long a = seg.start(q);
        int s = data.session[a];
        bool session_first = (q == 0) || (data.session[seg.start(q - 1)] != s);
        bool session_last = (q == Q - 1) || (data.session[seg.boundaries[q]] != s);
        if (session_first)
            ll += logz(params.rho[s][seg.states[q]]);
        else
            ll += logz(params.P[seg.states[q - 1]][seg.states[q]]);
        Vec row = build_design(data, a, spec);
        double phi = duration_rate(row, params.B[seg.states[q]], clamp_events);
        if (censor_last && session_last) {
            // Observed duration is a lower bound: contribute P(K >= tau).
            if (seg.durations[q] > 1) ll += ztp_logsf(seg.durations[q] - 1, phi);
        } else {
            ll += ztp_logpmf(seg.durations[q], phi);
        }
        if (ll == NEG_INF) return NEG_INF;
    }
    return ll;
}

double complete_loglik(const TimeSeriesData& data, const Segmentation& seg,
                       const ModelParams& params, const DesignSpec& spec,
                       bool censor_last) {
    double chain = chain_loglik(seg, params, data, spec, censor_last);
    if (chain == NEG_INF) return NEG_INF;
    return emission_loglik(data, seg, params.mu, params.sigma2) + chain;
}

}  // namespace hsmm
