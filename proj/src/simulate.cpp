#include "hsmm/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "hsmm/diagnostics.hpp"
#include "hsmm/dist.hpp"

namespace hsmm {

namespace {

int sample_categorical(const Vec& p, std::mt19937_64& rng) {
    double u = runif(rng);
    double cum = 0.0;
    int last_live = -1;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        last_live = static_cast<int>(i);
        cum += p[i];
        if (u <= cum) return last_live;
    }
    if (last_live < 0) throw std::runtime_error("categorical draw over zero-mass weights");
    return last_live;
}

}  // namespace

void SimScenario::validate() const {
    if (M < 1) throw ConfigError("state count must be at least 1", "scenario.M");
    if (n_target < 1) throw ConfigError("target length must be positive", "scenario.n_target");
    if (n_realizations < 1)
        throw ConfigError("realization count must be positive", "scenario.n_realizations");
    if (!(std::abs(psi) < 1.0))
        throw ConfigError("AR coefficient must satisfy |psi| < 1", "scenario.psi");
    if (n_raw_cov < 0)
        throw ConfigError("covariate count must be nonnegative", "scenario.n_raw_cov");
    if (add_product_col && n_raw_cov < 2)
        throw ConfigError("product column needs at least two raw covariates",
                          "scenario.add_product_col");
    int r = n_raw_cov + (add_product_col ? 1 : 0);
    if (design.n_cov != r)
        throw ConfigError("design covariate count must match generated columns",
                          "scenario.design.n_cov");
    design.validate();
    if (params.M != M) throw ConfigError("params.M must match scenario.M", "scenario.params");
    params.validate(1, design.cols());
}

SimResult simulate_realization(const SimScenario& sc, std::mt19937_64& rng) {
    sc.validate();
    long long n = sc.n_target;
    int r = sc.n_raw_cov + (sc.add_product_col ? 1 : 0);

    SimResult out;
    out.data.y.assign(n, 0.0);
    out.data.session.assign(n, 0);
    out.data.x0.assign(r, 0.0);
    out.data.X.assign(n, Vec(r, 0.0));
    for (long long t = 0; t < n; ++t) {
        for (int c = 0; c < sc.n_raw_cov; ++c) out.data.X[t][c] = rnorm(0.0, 1.0, rng);
        if (sc.add_product_col)
            out.data.X[t][r - 1] = out.data.X[t][0] * out.data.X[t][1];
    }

    long long t = 0;
    int prev = -1;
    double sd_innov = std::sqrt(1.0 - sc.psi * sc.psi);
    while (t < n) {
        int j = prev < 0 ? sample_categorical(sc.params.rho[0], rng)
                         : sample_categorical(sc.params.P[prev], rng);
        Vec row = build_design(out.data, t, sc.design);
        double phi = duration_rate(row, sc.params.B[j]);
        long long tau = ztp_sample(phi, rng);
        long long tau_c = std::min(tau, n - t);
        double sd_j = std::sqrt(sc.params.sigma2[j]);
        if (sc.ar_carryover && t > 0) {
            double prev_mean = sc.params.mu[prev];
            out.data.y[t] = sc.params.mu[j] + sc.psi * (out.data.y[t - 1] - prev_mean) +
                            sd_j * sd_innov * rnorm(0.0, 1.0, rng);
        } else {
            out.data.y[t] = sc.params.mu[j] + sd_j * rnorm(0.0, 1.0, rng);
        }
        for (long long i = 1; i < tau_c; ++i)
            out.data.y[t + i] = sc.params.mu[j] +
                                sc.psi * (out.data.y[t + i - 1] - sc.params.mu[j]) +
                                sd_j * sd_innov * rnorm(0.0, 1.0, rng);
        out.seg.states.push_back(j);
        out.seg.durations.push_back(tau_c);
        prev = j;
        t += tau_c;
    }
    out.seg.boundaries.resize(out.seg.durations.size());
    long long cum = 0;
    for (size_t q = 0; q < out.seg.durations.size(); ++q) {
        cum += out.seg.durations[q];
        out.seg.boundaries[q] = cum;
    }
    out.seg.validate(out.data, sc.M);
    return out;
}

SimScenario make_coverage_scenario(int M, double psi, long long n_target) {
    SimScenario sc;
    sc.M = M;
    sc.n_target = n_target;
    sc.psi = psi;
    sc.design.n_cov = 0;
    sc.design.session_terms = false;
    sc.params.M = M;
    sc.params.mu.resize(M);
    sc.params.sigma2.assign(M, 1.0);
    for (int j = 0; j < M; ++j) sc.params.mu[j] = 4.0 * j;
    sc.params.rho.assign(1, Vec(M, 1.0 / M));
    sc.params.P.assign(M, Vec(M, 0.0));
    if (M > 1)
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                if (i != j) sc.params.P[i][j] = 1.0 / (M - 1);
    sc.params.B.assign(M, Vec(1, std::log(30.0)));
    return sc;
}

std::vector<CoverageRow> run_coverage_experiment(const SimScenario& sc, const Vec& rates,
                                                 const Priors& priors,
                                                 const McmcConfig& config,
                                                 std::uint64_t seed, int threads) {
    sc.validate();
    priors.validate();
    config.validate();
    if (rates.empty()) throw ConfigError("at least one rate is required", "rates");
    for (double r : rates)
        if (!(r > 0.0 && r <= 1.0))
            throw ConfigError("rates must lie in (0, 1]", "rates");

    int R = sc.n_realizations;
    int K = static_cast<int>(rates.size());
    // per realization x rate: fraction of states covered
    Mat cov_mu(R, Vec(K, 0.0)), cov_s2(R, Vec(K, 0.0));

    parallel_for(R, threads, [&](long long i) {
        std::mt19937_64 sim_rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(i)));
        SimResult sim = simulate_realization(sc, sim_rng);
        std::vector<long long> seen(sc.M, 0);
        for (int s : sim.seg.states) ++seen[s];
        for (int j = 0; j < sc.M; ++j)
            if (!seen[j])
                throw std::runtime_error("realization " + std::to_string(i) +
                                         " never visits state " + std::to_string(j) +
                                         "; use another seed");
        for (int k = 0; k < K; ++k) {
            McmcConfig cfg = config;
            cfg.subsample_rate = rates[k];
            cfg.seed = derive_seed(seed, 2 * (static_cast<std::uint64_t>(i) * K + k) + 1);
            PosteriorDraws draws =
                run_fixed_state_chain(sim.data, sc.design, priors, cfg, sim.seg);
            for (int j = 0; j < sc.M; ++j) {
                Vec mu_draws, s2_draws;
                mu_draws.reserve(draws.records.size());
                s2_draws.reserve(draws.records.size());
                for (const DrawRecord& rec : draws.records) {
                    mu_draws.push_back(rec.mu[j]);
                    s2_draws.push_back(rec.sigma2[j]);
                }
                auto [ml, mh] = credible_interval(mu_draws, 0.90);
                auto [sl, sh] = credible_interval(s2_draws, 0.90);
                if (ml <= sc.params.mu[j] && sc.params.mu[j] <= mh)
                    cov_mu[i][k] += 1.0 / sc.M;
                if (sl <= sc.params.sigma2[j] && sc.params.sigma2[j] <= sh)
                    cov_s2[i][k] += 1.0 / sc.M;
            }
        }
    });

    std::vector<CoverageRow> rows(K);
    for (int k = 0; k < K; ++k) {
        rows[k].rate = rates[k];
        for (int i = 0; i < R; ++i) {
            rows[k].coverage_mu += cov_mu[i][k];
            rows[k].coverage_sigma2 += cov_s2[i][k];
        }
        rows[k].coverage_mu /= R;
        rows[k].coverage_sigma2 /= R;
        double m2 = 0.0;
        for (int i = 0; i < R; ++i) {
            double d = cov_mu[i][k] - rows[k].coverage_mu;
            m2 += d * d;
        }
        rows[k].mc_stderr = R > 1 ? std::sqrt(m2 / (R - 1) / R) : 0.0;
    }
    return rows;
}

}  // namespace hsmm
