#include "hsmm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsmm/dist.hpp"

namespace hsmm {

void McmcConfig::validate() const {
    if (n_iter < 1) throw ConfigError("iteration count must be positive", "mcmc.n_iter");
    if (n_adapt < 0 || n_adapt >= n_iter)
        throw ConfigError("adaptation count must lie in [0, n_iter)", "mcmc.n_adapt");
    if (thin < 1) throw ConfigError("thinning must be at least 1", "mcmc.thin");
    if (!(subsample_rate > 0.0 && subsample_rate <= 1.0))
        throw ConfigError("subsample rate must lie in (0, 1]", "mcmc.subsample_rate");
    if (d_max < 0) throw ConfigError("d_max must be nonnegative", "mcmc.d_max");
    if (!(kappa0 > 0.0)) throw ConfigError("initial proposal scale must be positive", "mcmc.kappa0");
    if (!(target_accept > 0.0 && target_accept < 1.0))
        throw ConfigError("target acceptance must lie in (0, 1)", "mcmc.target_accept");
    if (threads < 1) throw ConfigError("thread count must be positive", "mcmc.threads");
    if (progress_every < 0)
        throw ConfigError("progress interval must be nonnegative", "mcmc.progress_every");
}

Mat count_initial(const Segmentation& seg, const TimeSeriesData& data, int M) {
    Mat counts(data.n_sessions(), Vec(M, 0.0));
    for (long long q = 0; q < seg.n_segments(); ++q) {
        long long a = seg.start(q);
        if (q == 0 || data.session[a - 1] != data.session[a])
            counts[data.session[a]][seg.states[q]] += 1.0;
    }
    return counts;
}

Mat count_transitions(const Segmentation& seg, const TimeSeriesData& data, int M) {
    Mat counts(M, Vec(M, 0.0));
    for (long long q = 1; q < seg.n_segments(); ++q) {
        long long a = seg.start(q);
        if (data.session[a - 1] == data.session[a])
            counts[seg.states[q - 1]][seg.states[q]] += 1.0;
    }
    return counts;
}

void update_rho(ModelParams& params, const Segmentation& seg, const TimeSeriesData& data,
                const Priors& priors, std::mt19937_64& rng) {
    Mat counts = count_initial(seg, data, params.M);
    for (int s = 0; s < data.n_sessions(); ++s) {
        Vec alpha(params.M);
        for (int j = 0; j < params.M; ++j) alpha[j] = priors.rho_conc + counts[s][j];
        params.rho[s] = dirichlet_sample(alpha, rng);
    }
}

void update_transitions(ModelParams& params, const Segmentation& seg,
                        const TimeSeriesData& data, const Priors& priors,
                        std::mt19937_64& rng) {
    if (params.M < 2) return;
    Mat counts = count_transitions(seg, data, params.M);
    for (int j = 0; j < params.M; ++j) {
        Vec alpha;
        alpha.reserve(params.M - 1);
        for (int k = 0; k < params.M; ++k)
            if (k != j) alpha.push_back(priors.trans_conc + counts[j][k]);
        Vec draw = dirichlet_sample(alpha, rng);
        int idx = 0;
        for (int k = 0; k < params.M; ++k)
            params.P[j][k] = (k == j) ? 0.0 : draw[idx++];
    }
}

double beta_log_accept_ratio(const TimeSeriesData& data, const Segmentation& seg,
                             const Mat& D, int state, const Vec& beta_old,
                             const Vec& beta_new, const Priors& priors,
                             bool censor_last, long long* clamp_events) {
    if (beta_old.size() != beta_new.size())
        throw std::invalid_argument("coefficient vectors have different lengths");
    double lr = 0.0;
    long long Q = seg.n_segments();
    for (long long q = 0; q < Q; ++q) {
        if (seg.states[q] != state) continue;
        long long a = seg.start(q);
        double phi_old = duration_rate(D[a], beta_old, clamp_events);
        double phi_new = duration_rate(D[a], beta_new, clamp_events);
        bool session_last =
            (q == Q - 1) || (data.session[seg.boundaries[q]] != data.session[a]);
        if (censor_last && session_last) {
            long long d = seg.durations[q];
            if (d > 1) lr += ztp_logsf(d - 1, phi_new) - ztp_logsf(d - 1, phi_old);
        } else {
            lr += ztp_logpmf(seg.durations[q], phi_new) -
                  ztp_logpmf(seg.durations[q], phi_old);
        }
    }
    double quad = 0.0;
    for (size_t i = 0; i < beta_old.size(); ++i) {
        double dn = beta_new[i] - priors.beta_mean;
        double dd = beta_old[i] - priors.beta_mean;
        quad += dn * dn - dd * dd;
    }
    return lr - quad / (2.0 * priors.beta_var);
}

std::vector<long long> subsample_indices(long long n, double rate, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("cannot subsample an empty series");
    if (!(rate > 0.0 && rate <= 1.0))
        throw ConfigError("subsample rate must lie in (0, 1]", "mcmc.subsample_rate");
    std::vector<long long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (rate == 1.0) return idx;
    long long m = std::clamp<long long>(std::llround(rate * static_cast<double>(n)), 1, n);
    for (long long i = 0; i < m; ++i) {
        long long j = i + runif_int(n - i, rng);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::pair<double, double> mu_full_conditional(double sum_y, long long n_j,
                                              double sigma2_j, const Priors& priors) {
    double prec = static_cast<double>(n_j) / sigma2_j + 1.0 / priors.lambda2_mu;
    double mean = (sum_y / sigma2_j + priors.theta_mu / priors.lambda2_mu) / prec;
    return {mean, 1.0 / prec};
}

std::vector<int> ascending_mean_order(const Vec& mu) {
    std::vector<int> perm(mu.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return mu[a] < mu[b]; });
    return perm;
}

void relabel_states(ModelParams& params, Segmentation& seg, Vec& kappa,
                    std::vector<long long>& accepted, std::vector<long long>& proposed,
                    const std::vector<int>& perm) {
    int M = params.M;
    std::vector<int> inv(M);
    for (int j = 0; j < M; ++j) inv[perm[j]] = j;
    auto permute_vec = [&](Vec& v) {
        Vec out(M);
        for (int j = 0; j < M; ++j) out[j] = v[perm[j]];
        v = std::move(out);
    };
    permute_vec(params.mu);
    permute_vec(params.sigma2);
    permute_vec(kappa);
    auto permute_counts = [&](std::vector<long long>& v) {
        std::vector<long long> out(M);
        for (int j = 0; j < M; ++j) out[j] = v[perm[j]];
        v = std::move(out);
    };
    permute_counts(accepted);
    permute_counts(proposed);
    for (Vec& row : params.rho) permute_vec(row);
    Mat newP(M, Vec(M));
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) newP[i][j] = params.P[perm[i]][perm[j]];
    params.P = std::move(newP);
    Mat newB(M);
    for (int j = 0; j < M; ++j) newB[j] = params.B[perm[j]];
    params.B = std::move(newB);
    for (int& s : seg.states) s = inv[s];
}

namespace {

double quantile_sorted(const Vec& sorted, double p) {
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    long long lo = static_cast<long long>(std::floor(h));
    long long hi = std::min<long long>(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

// Deterministic starting point: emission moments from the given segmentation
// when available, otherwise marginal quantiles of y.
ModelParams initial_params(const TimeSeriesData& data, const DesignSpec& spec, int M,
                           const Segmentation* init_seg) {
    ModelParams p;
    p.M = M;
    p.mu.resize(M);
    p.sigma2.resize(M);
    double var_y = 0.0, mean_y = 0.0;
    for (double v : data.y) mean_y += v;
    mean_y /= static_cast<double>(data.n());
    for (double v : data.y) var_y += (v - mean_y) * (v - mean_y);
    var_y = data.n() > 1 ? var_y / static_cast<double>(data.n() - 1) : 1.0;
    if (var_y <= 0.0) var_y = 1.0;

    if (init_seg) {
        std::vector<int> sidx = init_seg->expand();
        Vec sum(M, 0.0), sumsq(M, 0.0);
        std::vector<long long> cnt(M, 0);
        for (long long t = 0; t < data.n(); ++t) {
            int j = sidx[t];
            sum[j] += data.y[t];
            sumsq[j] += data.y[t] * data.y[t];
            ++cnt[j];
        }
        for (int j = 0; j < M; ++j) {
            p.mu[j] = cnt[j] > 0 ? sum[j] / cnt[j] : mean_y;
            double v = cnt[j] > 1 ? (sumsq[j] - sum[j] * sum[j] / cnt[j]) / (cnt[j] - 1)
                                  : var_y;
            p.sigma2[j] = v > 1e-12 ? v : var_y;
        }
    } else {
        Vec sorted = data.y;
        std::sort(sorted.begin(), sorted.end());
        for (int j = 0; j < M; ++j) {
            p.mu[j] = quantile_sorted(sorted, (j + 0.5) / M);
            p.sigma2[j] = var_y / M;
        }
    }

    p.rho.assign(data.n_sessions(), Vec(M, 1.0 / M));
    p.P.assign(M, Vec(M, 0.0));
    if (M > 1)
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                if (i != j) p.P[i][j] = 1.0 / (M - 1);
    p.B.assign(M, Vec(spec.cols(), 0.0));
    for (int j = 0; j < M; ++j) p.B[j][0] = std::log(20.0);
    return p;
}

}  // namespace

PosteriorDraws run_chain(const TimeSeriesData& data, const DesignSpec& spec, int M,
                         const Priors& priors, const McmcConfig& config,
                         const Segmentation* init_seg, const ProgressFn& progress) {
    data.validate();
    spec.validate();
    priors.validate();
    config.validate();
    if (M < 1) throw ConfigError("state count must be at least 1", "model.M");
    if (static_cast<int>(data.x0.size()) != spec.n_cov)
        throw DataError("design spec covariate count does not match data");

    RngBank bank(config.seed);
    long long n = data.n();
    ModelParams params = initial_params(data, spec, M, init_seg);
    Segmentation seg;
    if (init_seg) {
        init_seg->validate(data, M);
        seg = *init_seg;
    } else {
        seg = viterbi_decode(data, params, spec, config.d_max, config.censor_last).seg;
    }

    Mat D = design_matrix(data, spec);
    Vec kappa(M, config.kappa0);
    std::vector<long long> acc(M, 0), prop(M, 0);
    std::vector<long long> identity = subsample_indices(n, 1.0, bank.subsample);

    PosteriorDraws out;
    out.M = M;
    out.n_sessions = data.n_sessions();
    out.design_cols = spec.cols();
    long long kept = config.thin > 0 ? (config.n_iter - config.n_adapt) / config.thin + 1 : 0;
    out.records.reserve(kept);

    std::vector<int> sidx = seg.expand();

    for (long long l = 1; l <= config.n_iter; ++l) {
        if (config.update_rho) update_rho(params, seg, data, priors, bank.rho);
        if (config.update_trans) update_transitions(params, seg, data, priors, bank.trans);

        if (config.update_beta) {
            int cols = spec.cols();
            for (int j = 0; j < M; ++j) {
                Vec prop_beta(cols);
                for (int c = 0; c < cols; ++c)
                    prop_beta[c] = params.B[j][c] + kappa[j] * rnorm(0.0, 1.0, bank.beta);
                double lr = beta_log_accept_ratio(data, seg, D, j, params.B[j], prop_beta,
                                                  priors, config.censor_last,
                                                  &out.clamp_events);
                double u = runif(bank.beta);
                bool accept = std::log(u) < lr;
                ++prop[j];
                if (accept) {
                    params.B[j] = std::move(prop_beta);
                    ++acc[j];
                }
                if (l <= config.n_adapt) {
                    double gain = 1.0 / std::ceil(static_cast<double>(l) / 50.0);
                    double step = ((accept ? 1.0 : 0.0) - config.target_accept) * gain;
                    kappa[j] = std::clamp(kappa[j] * std::exp(step), 1e-8, 1e8);
                }
            }
        }

        if (config.update_states) {
            if (config.stochastic_states) {
                long long dm = config.d_max ? config.d_max
                                            : default_d_max(params, data, spec);
                seg = sample_states(data, params, spec, dm, config.censor_last,
                                    bank.states);
                out.d_max_used = dm;
                DurationGrid g = duration_pmf_table(params, data, spec, dm);
                out.max_truncated_mass =
                    std::max(out.max_truncated_mass, 1.0 - ztp_cdf(dm, g.max_phi()));
            } else {
                DecodeResult dec = viterbi_decode(data, params, spec, config.d_max,
                                                  config.censor_last);
                seg = std::move(dec.seg);
                out.max_truncated_mass = std::max(out.max_truncated_mass, dec.truncated_mass);
                out.d_max_used = dec.d_max;
            }
            sidx = seg.expand();
        }

        std::vector<long long> scratch;
        if (config.subsample_rate < 1.0)
            scratch = subsample_indices(n, config.subsample_rate, bank.subsample);
        const std::vector<long long>& idx =
            config.subsample_rate == 1.0 ? identity : scratch;

        Vec sum_y(M, 0.0);
        std::vector<long long> cnt(M, 0);
        for (long long i : idx) {
            sum_y[sidx[i]] += data.y[i];
            ++cnt[sidx[i]];
        }

        Vec mu_prev = params.mu;
        if (config.update_mu) {
            for (int j = 0; j < M; ++j) {
                auto [mean, var] = mu_full_conditional(sum_y[j], cnt[j], params.sigma2[j],
                                                       priors);
                params.mu[j] = rnorm(mean, std::sqrt(var), bank.mu);
            }
        }
        if (config.update_sigma2) {
            const Vec& mu_ref = config.sigma2_uses_prev_mu ? mu_prev : params.mu;
            Vec ssq(M, 0.0);
            for (long long i : idx) {
                double d = data.y[i] - mu_ref[sidx[i]];
                ssq[sidx[i]] += d * d;
            }
            for (int j = 0; j < M; ++j)
                params.sigma2[j] = rinvgamma(priors.ig_shape + 0.5 * cnt[j],
                                             priors.ig_scale + 0.5 * ssq[j], bank.sigma2);
        }

        std::vector<int> perm = ascending_mean_order(params.mu);
        bool is_identity = true;
        for (int j = 0; j < M; ++j)
            if (perm[j] != j) is_identity = false;
        if (!is_identity) {
            relabel_states(params, seg, kappa, acc, prop, perm);
            sidx = seg.expand();
        }

        bool record = l > config.n_adapt && (l - config.n_adapt - 1) % config.thin == 0;
        bool report = config.progress_every > 0 &&
                      (l % config.progress_every == 0 || l == config.n_iter);
        if (record || report) {
            Vec arate(M, 0.0);
            for (int j = 0; j < M; ++j)
                arate[j] = prop[j] > 0 ? static_cast<double>(acc[j]) / prop[j] : 0.0;
            double ll = complete_loglik(data, seg, params, spec, config.censor_last);
            if (record) {
                DrawRecord rec;
                rec.iter = l;
                rec.mu = params.mu;
                rec.sigma2 = params.sigma2;
                rec.rho = params.rho;
                rec.P = params.P;
                rec.B = params.B;
                rec.kappa = kappa;
                rec.accept_rate = arate;
                rec.loglik = ll;
                rec.n_segments = seg.n_segments();
                rec.phi_mean.assign(M, std::numeric_limits<double>::quiet_NaN());
                rec.phi_min = rec.phi_mean;
                rec.phi_max = rec.phi_mean;
                Vec psum(M, 0.0);
                std::vector<long long> pcnt(M, 0);
                for (long long q = 0; q < seg.n_segments(); ++q) {
                    int j = seg.states[q];
                    double phi = duration_rate(D[seg.start(q)], params.B[j]);
                    psum[j] += phi;
                    ++pcnt[j];
                    if (pcnt[j] == 1) {
                        rec.phi_min[j] = rec.phi_max[j] = phi;
                    } else {
                        rec.phi_min[j] = std::min(rec.phi_min[j], phi);
                        rec.phi_max[j] = std::max(rec.phi_max[j], phi);
                    }
                }
                for (int j = 0; j < M; ++j)
                    if (pcnt[j] > 0) rec.phi_mean[j] = psum[j] / pcnt[j];
                out.records.push_back(std::move(rec));
            }
            if (report && progress) progress(l, ll, arate);
        }
    }

    out.final_seg = std::move(seg);
    out.kappa = std::move(kappa);
    out.accept_rate.assign(M, 0.0);
    for (int j = 0; j < M; ++j)
        out.accept_rate[j] = prop[j] > 0 ? static_cast<double>(acc[j]) / prop[j] : 0.0;
    if (!config.update_states) out.d_max_used = config.d_max;
    return out;
}

PosteriorDraws run_fixed_state_chain(const TimeSeriesData& data, const DesignSpec& spec,
                                     const Priors& priors, const McmcConfig& config,
                                     const Segmentation& truth) {
    McmcConfig cfg = config;
    cfg.update_rho = cfg.update_trans = cfg.update_beta = cfg.update_states = false;
    int M = 0;
    for (int s : truth.states) M = std::max(M, s + 1);
    return run_chain(data, spec, M, priors, cfg, &truth);
}

}  // namespace hsmm
