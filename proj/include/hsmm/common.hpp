#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hsmm {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

inline constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

// Raised for malformed configuration; carries the offending field path.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(const std::string& msg, std::string field_path = "")
        : std::runtime_error(field_path.empty() ? msg : msg + " (field: " + field_path + ")"),
          field(std::move(field_path)) {}
};

// Raised for malformed input data (CSV contents, shape mismatches).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log(x) that maps 0 to -inf instead of raising; negatives are a caller bug.
inline double logz(double x) {
    if (x < 0.0) throw std::domain_error("logz: negative argument");
    return x > 0.0 ? std::log(x) : NEG_INF;
}

// log(1 - exp(-a)) for a > 0, stable near both ends.
inline double log1mexp(double a) {
    if (!(a > 0.0)) throw std::domain_error("log1mexp: argument must be positive");
    if (a <= 0.6931471805599453) return std::log(-std::expm1(-a));
    return std::log1p(-std::exp(-a));
}

inline double logsumexp(const Vec& v) {
    double m = NEG_INF;
    for (double x : v) m = std::max(m, x);
    if (m == NEG_INF) return NEG_INF;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Mixes a root seed with a stream tag into an engine seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag * 0x9e3779b97f4a7c15ULL + 1));
}

// One independent RNG substream per sampler block, so toggling an update off
// never shifts the draws consumed by any other block.
struct RngBank {
    std::mt19937_64 init, rho, trans, beta, states, subsample, mu, sigma2;

    explicit RngBank(std::uint64_t seed)
        : init(derive_seed(seed, 1)),
          rho(derive_seed(seed, 2)),
          trans(derive_seed(seed, 3)),
          beta(derive_seed(seed, 4)),
          states(derive_seed(seed, 5)),
          subsample(derive_seed(seed, 6)),
          mu(derive_seed(seed, 7)),
          sigma2(derive_seed(seed, 8)) {}
};

// Runs fn(i) for i in [0, n). With threads <= 1 runs inline; otherwise splits
// into contiguous blocks. Results must not depend on the thread count.
inline void parallel_for(long long n, int threads, const std::function<void(long long)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    int nt = static_cast<int>(std::min<long long>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr err;
    std::mutex err_mx;
    long long chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        long long lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &err, &err_mx] {
            try {
                for (long long i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mx);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace hsmm
