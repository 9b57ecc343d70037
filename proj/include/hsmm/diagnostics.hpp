#pragma once

#include <string>
#include <utility>

#include "hsmm/model.hpp"
#include "hsmm/sampler.hpp"

namespace hsmm {

// Central credible interval by linear quantile interpolation
// (h = (n-1)p between order statistics).
std::pair<double, double> credible_interval(const Vec& draws, double level);
double quantile(const Vec& draws, double p);

// Mean lag-1 autocorrelation within segments of length >= 3; zero-variance
// segments are skipped. Errors when no segment qualifies.
double segment_autocorrelation(const TimeSeriesData& data, const Segmentation& seg);

// Multivariate potential scale reduction factor over m chains of L draws in
// d dimensions. Identical chains give exactly (L-1)/L.
double mpsrf(const std::vector<Mat>& chains);

// Default scalar set tracked for convergence: mu, sigma2, and the duration
// coefficient rows.
Mat draws_matrix(const PosteriorDraws& draws);
std::vector<std::string> draws_matrix_names(const PosteriorDraws& draws);
double mpsrf_from_draws(const std::vector<PosteriorDraws>& chains);

struct SummaryRow {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Per-parameter posterior summaries over pooled chains.
std::vector<SummaryRow> summarize(const std::vector<PosteriorDraws>& chains, double level);

// Subsampling rate suggestion from the bundled coverage benchmarks, keyed by
// estimated within-segment autocorrelation and state count: the largest
// tabulated rate whose interpolated coverage stays at or above 90%.
double recommend_rate(double psi_hat, int M, long long n, std::string* warning = nullptr);

}  // namespace hsmm
