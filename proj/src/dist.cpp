#include "hsmm/dist.hpp"

#include <cmath>

namespace hsmm {

namespace {

void check_phi(double phi) {
    if (!std::isfinite(phi) || phi <= 0.0)
        throw std::domain_error("zero-truncated Poisson rate must be finite and positive");
}

}  // namespace

double ztp_logpmf(long long k, double phi) {
    check_phi(phi);
    if (k < 1) throw std::domain_error("zero-truncated Poisson support starts at 1");
    double kd = static_cast<double>(k);
    return kd * std::log(phi) - phi - std::lgamma(kd + 1.0) - log1mexp(phi);
}

double ztp_cdf(long long k, double phi) {
    check_phi(phi);
    if (k < 1) return 0.0;
    // Forward recurrence p_{i+1} = p_i * phi / (i+1); terms only underflow in
    // regimes where they are negligible anyway.
    double p = std::exp(ztp_logpmf(1, phi));
    double cum = p;
    for (long long i = 1; i < k; ++i) {
        p *= phi / static_cast<double>(i + 1);
        cum += p;
    }
    return std::min(cum, 1.0);
}

double ztp_logsf(long long k, double phi) {
    check_phi(phi);
    if (k < 1) return 0.0;
    // Sum the tail in log space from k+1 until terms stop mattering.
    Vec terms;
    double lead = ztp_logpmf(k + 1, phi);
    terms.push_back(lead);
    double lp = lead;
    for (long long i = k + 1;; ++i) {
        lp += std::log(phi) - std::log(static_cast<double>(i + 1));
        terms.push_back(lp);
        if (static_cast<double>(i + 1) > phi && lp < lead - 60.0) break;
        if (terms.size() > 100000) break;
    }
    return logsumexp(terms);
}

long long ztp_quantile(double p, double phi, long long k_cap) {
    check_phi(phi);
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile level must lie in (0, 1)");
    if (k_cap < 1) throw std::domain_error("quantile cap must be at least 1");
    double mass = std::exp(ztp_logpmf(1, phi));
    double cum = mass;
    long long k = 1;
    while (cum < p && k < k_cap) {
        mass *= phi / static_cast<double>(k + 1);
        ++k;
        cum += mass;
    }
    return k;
}

double ztp_mean(double phi) {
    check_phi(phi);
    return phi / -std::expm1(-phi);
}

long long ztp_sample(double phi, std::mt19937_64& rng) {
    check_phi(phi);
    if (phi >= 1.0) {
        // Rejection on zero: acceptance probability 1 - e^-phi >= 1 - 1/e.
        std::poisson_distribution<long long> pois(phi);
        for (;;) {
            long long k = pois(rng);
            if (k > 0) return k;
        }
    }
    // Small rates: inverse CDF by accumulation, heavy mass at k = 1.
    double u = runif(rng);
    double mass = std::exp(ztp_logpmf(1, phi));
    double cum = mass;
    long long k = 1;
    while (u > cum && k < 1000) {
        mass *= phi / static_cast<double>(k + 1);
        ++k;
        cum += mass;
    }
    return k;
}

Vec dirichlet_sample(const Vec& alpha, std::mt19937_64& rng) {
    if (alpha.empty()) throw std::domain_error("dirichlet needs at least one component");
    for (double a : alpha)
        if (!std::isfinite(a) || a <= 0.0)
            throw std::domain_error("dirichlet concentrations must be positive");
    Vec g(alpha.size());
    for (int attempt = 0; attempt < 100; ++attempt) {
        double sum = 0.0;
        for (size_t i = 0; i < alpha.size(); ++i) {
            g[i] = rgamma(alpha[i], 1.0, rng);
            sum += g[i];
        }
        if (sum > 0.0) {
            for (double& x : g) x /= sum;
            return g;
        }
    }
    throw std::runtime_error("dirichlet sampling degenerate: all gamma draws underflowed");
}

double norm_logpdf(double x, double mean, double var) {
    if (!(var > 0.0)) throw std::domain_error("normal variance must be positive");
    double d = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double rnorm(double mean, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> d(mean, sd);
    return d(rng);
}

double rgamma(double shape, double scale, std::mt19937_64& rng) {
    std::gamma_distribution<double> d(shape, scale);
    return d(rng);
}

double rinvgamma(double shape, double scale, std::mt19937_64& rng) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::domain_error("inverse gamma parameters must be positive");
    double g = rgamma(shape, 1.0, rng);
    if (g <= 0.0) g = std::numeric_limits<double>::min();
    return scale / g;
}

double runif(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(rng);
}

long long runif_int(long long n, std::mt19937_64& rng) {
    std::uniform_int_distribution<long long> d(0, n - 1);
    return d(rng);
}

}  // namespace hsmm
