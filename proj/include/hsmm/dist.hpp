#pragma once

#include <random>

#include "hsmm/common.hpp"

namespace hsmm {

// Zero-truncated Poisson, support k >= 1.
double ztp_logpmf(long long k, double phi);
double ztp_cdf(long long k, double phi);
double ztp_logsf(long long k, double phi);  // log P(K > k)
// Smallest k with CDF >= p, capped at k_cap.
long long ztp_quantile(double p, double phi, long long k_cap);
double ztp_mean(double phi);
long long ztp_sample(double phi, std::mt19937_64& rng);

Vec dirichlet_sample(const Vec& alpha, std::mt19937_64& rng);

double norm_logpdf(double x, double mean, double var);
double norm_cdf(double z);  // standard normal

double rnorm(double mean, double sd, std::mt19937_64& rng);
double rgamma(double shape, double scale, std::mt19937_64& rng);
// Inverse gamma with density proportional to x^-(shape+1) exp(-scale/x).
double rinvgamma(double shape, double scale, std::mt19937_64& rng);
double runif(std::mt19937_64& rng);
// Uniform draw from {0, ..., n-1}.
long long runif_int(long long n, std::mt19937_64& rng);

}  // namespace hsmm
