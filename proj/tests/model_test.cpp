#include <doctest.h>

#include <cmath>
#include <random>

#include "hsmm/model.hpp"
#include "oracle.hpp"

using namespace hsmm;

namespace {

TimeSeriesData toy_data() {
    TimeSeriesData d;
    d.y = {1.0, 2.0, 3.0, 4.0};
    d.X = {{1.0}, {2.0}, {3.0}, {4.0}};
    d.session = {0, 0, 0, 0};
    d.x0 = {0.5};
    return d;
}

}  // namespace

TEST_CASE("design row reads x0 at the series start") {
    TimeSeriesData d = toy_data();
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    Vec row = build_design(d, 0, spec);
    REQUIRE(row.size() == 2);
    CHECK(row[0] == 1.0);
    CHECK(row[1] == 0.5);
}

TEST_CASE("design row uses the covariate just before the anchor") {
    TimeSeriesData d = toy_data();
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    CHECK(build_design(d, 1, spec)[1] == 1.0);
    CHECK(build_design(d, 3, spec)[1] == 3.0);
    // Later covariate values never leak into the row.
    d.X[3][0] = 1e9;
    CHECK(build_design(d, 3, spec)[1] == 3.0);
}

TEST_CASE("windowed design averages the points before the anchor") {
    TimeSeriesData d = toy_data();
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    spec.windowed = {1};
    spec.window = 3;
    // Anchor 3 with window 3 covers the first three observations.
    CHECK(build_design(d, 3, spec)[1] == doctest::Approx((1.0 + 2.0 + 3.0) / 3.0));
    // Anchor 2 has only two points available.
    CHECK(build_design(d, 2, spec)[1] == doctest::Approx(1.5));
    // Anchor 0 falls back to x0 like any other covariate.
    CHECK(build_design(d, 0, spec)[1] == 0.5);
}

TEST_CASE("standardization and session terms") {
    TimeSeriesData d = toy_data();
    d.session = {0, 0, 1, 1};
    DesignSpec spec;
    spec.n_cov = 1;
    spec.center = {2.0};
    spec.scale = {4.0};
    spec.session_terms = true;
    Vec row = build_design(d, 2, spec);
    REQUIRE(row.size() == 4);
    double f = (2.0 - 2.0) / 4.0;
    CHECK(row[1] == doctest::Approx(f));
    CHECK(row[2] == 1.0);  // session ordinal of the anchor
    CHECK(row[3] == doctest::Approx(f * 1.0));
    // Session 0 rows zero out the interaction block.
    Vec row0 = build_design(d, 1, spec);
    CHECK(row0[2] == 0.0);
    CHECK(row0[3] == 0.0);
}

TEST_CASE("duration rate is the exponentiated linear predictor with clamping") {
    CHECK(duration_rate({1.0, 0.3}, {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(duration_rate({1.0}, {3.42}) == doctest::Approx(std::exp(3.42)));

    long long clamps = 0;
    CHECK(duration_rate({1.0}, {45.0}, &clamps) == doctest::Approx(std::exp(30.0)));
    CHECK(clamps == 1);
    CHECK(duration_rate({1.0}, {-80.0}, &clamps) == doctest::Approx(std::exp(-30.0)));
    CHECK(clamps == 2);
    CHECK(duration_rate({1.0}, {5.0}, &clamps) == doctest::Approx(std::exp(5.0)));
    CHECK(clamps == 2);

    CHECK_THROWS_AS(duration_rate({1.0, 2.0}, {1.0}), std::invalid_argument);
    double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(duration_rate({inf}, {1.0}), std::domain_error);
}

TEST_CASE("rolling mean matches a hand table") {
    Vec x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    Vec m = rolling_mean(x, 3);
    Vec want = {1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
    REQUIRE(m.size() == want.size());
    for (size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(want[i]));
    CHECK_THROWS(rolling_mean(x, 0));
}

TEST_CASE("segmentation validation catches structural defects") {
    TimeSeriesData d = toy_data();
    Segmentation ok;
    ok.states = {0, 1};
    ok.durations = {2, 2};
    ok.boundaries = {2, 4};
    CHECK_NOTHROW(ok.validate(d, 2));

    Segmentation bad = ok;
    bad.boundaries = {2, 5};
    CHECK_THROWS_AS(bad.validate(d, 2), DataError);

    bad = ok;
    bad.states = {0, 0};  // adjacent same state inside one session
    CHECK_THROWS_AS(bad.validate(d, 2), DataError);

    bad = ok;
    bad.states = {0, 2};
    CHECK_THROWS_AS(bad.validate(d, 2), DataError);

    TimeSeriesData two = toy_data();
    two.session = {0, 0, 1, 1};
    Segmentation straddle;
    straddle.states = {0, 1};
    straddle.durations = {3, 1};
    straddle.boundaries = {3, 4};
    CHECK_THROWS_AS(straddle.validate(two, 2), DataError);
    // The same state on both sides of a session break is legitimate.
    Segmentation resume;
    resume.states = {0, 0};
    resume.durations = {2, 2};
    resume.boundaries = {2, 4};
    CHECK_NOTHROW(resume.validate(two, 2));
}

TEST_CASE("from_states collapses runs and splits at session breaks") {
    std::vector<int> s = {2, 2, 0, 0, 0, 1};
    std::vector<int> sess = {0, 0, 0, 0, 1, 1};
    Segmentation seg = Segmentation::from_states(s, sess);
    REQUIRE(seg.n_segments() == 4);
    CHECK(seg.states == std::vector<int>{2, 0, 0, 1});
    CHECK(seg.durations == std::vector<long long>{2, 2, 1, 1});
    CHECK(seg.boundaries == std::vector<long long>{2, 4, 5, 6});
    CHECK(seg.expand() == s);
}

TEST_CASE("single-segment chain log likelihood is rho plus the duration term") {
    TimeSeriesData d = toy_data();
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    ModelParams p;
    p.M = 2;
    p.mu = {0.0, 1.0};
    p.sigma2 = {1.0, 1.0};
    p.rho = {{0.25, 0.75}};
    p.P = {{0.0, 1.0}, {1.0, 0.0}};
    p.B = {{1.0, 0.1}, {0.5, -0.2}};

    Segmentation seg;
    seg.states = {1};
    seg.durations = {4};
    seg.boundaries = {4};

    double phi = std::exp(0.5 - 0.2 * 0.5);  // anchor 0 reads x0
    double want = std::log(0.75) + ztp_logpmf(4, phi);
    CHECK(chain_loglik(seg, p, d, spec) == doctest::Approx(want).epsilon(1e-13));

    // Right censoring swaps the pmf for the tail mass.
    double want_c = std::log(0.75) + ztp_logsf(3, phi);
    CHECK(chain_loglik(seg, p, d, spec, true) == doctest::Approx(want_c).epsilon(1e-13));
}

TEST_CASE("sessions restart from rho without a transition factor") {
    TimeSeriesData d = toy_data();
    d.session = {0, 0, 1, 1};
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    ModelParams p;
    p.M = 2;
    p.mu = {0.0, 1.0};
    p.sigma2 = {1.0, 1.0};
    p.rho = {{0.3, 0.7}, {0.6, 0.4}};
    p.P = {{0.0, 1.0}, {1.0, 0.0}};
    p.B = {{0.8, 0.0}, {0.2, 0.0}};

    Segmentation seg;
    seg.states = {1, 1};  // same state resumes across the break
    seg.durations = {2, 2};
    seg.boundaries = {2, 4};

    double phi = std::exp(0.2);
    double want = std::log(0.7) + ztp_logpmf(2, phi) + std::log(0.4) + ztp_logpmf(2, phi);
    CHECK(chain_loglik(seg, p, d, spec) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("zero-probability configurations yield minus infinity, not an error") {
    TimeSeriesData d = toy_data();
    DesignSpec spec;
    spec.n_cov = 1;
    spec.session_terms = false;
    ModelParams p;
    p.M = 2;
    p.mu = {0.0, 1.0};
    p.sigma2 = {1.0, 1.0};
    p.rho = {{1.0, 0.0}};
    p.P = {{0.0, 1.0}, {1.0, 0.0}};
    p.B = {{0.0, 0.0}, {0.0, 0.0}};

    Segmentation seg;
    seg.states = {1};
    seg.durations = {4};
    seg.boundaries = {4};
    CHECK(chain_loglik(seg, p, d, spec) == NEG_INF);
    CHECK(complete_loglik(d, seg, p, spec) == NEG_INF);
}

TEST_CASE("emission log likelihood sums pointwise densities and honors the mask") {
    TimeSeriesData d = toy_data();
    Segmentation seg;
    seg.states = {0};
    seg.durations = {4};
    seg.boundaries = {4};
    Vec mu = {2.5};
    Vec s2 = {2.0};
    double want = 0.0;
    for (double y : d.y) want += norm_logpdf(y, 2.5, 2.0);
    CHECK(emission_loglik(d, seg, mu, s2) == doctest::Approx(want).epsilon(1e-13));

    std::vector<std::uint8_t> mask = {1, 0, 0, 1};
    double masked = norm_logpdf(1.0, 2.5, 2.0) + norm_logpdf(4.0, 2.5, 2.0);
    CHECK(emission_loglik(d, seg, mu, s2, &mask) == doctest::Approx(masked).epsilon(1e-13));
}

TEST_CASE("complete log likelihood matches the long-double reference") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 40; ++rep) {
        auto inst = testutil::make_random_instance(rng);
        bool censor = rep % 2 == 0;
        double got = complete_loglik(inst.data, inst.seg, inst.params, inst.spec, censor);
        long double want = testutil::complete_loglik_direct(inst.data, inst.seg, inst.params,
                                                            inst.spec, censor);
        CHECK(got == doctest::Approx(static_cast<double>(want)).epsilon(1e-11));
    }
}

TEST_CASE("series validation rejects malformed input") {
    TimeSeriesData d = toy_data();
    CHECK_NOTHROW(d.validate());

    TimeSeriesData bad = d;
    bad.session = {0, 0, 2, 2};
    CHECK_THROWS_AS(bad.validate(), DataError);

    bad = d;
    bad.session = {1, 1, 1, 1};
    CHECK_THROWS_AS(bad.validate(), DataError);

    bad = d;
    bad.y[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), DataError);

    bad = d;
    bad.X[1] = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("model parameter validation") {
    ModelParams p;
    p.M = 2;
    p.mu = {0.0, 1.0};
    p.sigma2 = {1.0, 1.0};
    p.rho = {{0.5, 0.5}};
    p.P = {{0.0, 1.0}, {1.0, 0.0}};
    p.B = {{0.0}, {0.0}};
    CHECK_NOTHROW(p.validate(1, 1));

    ModelParams bad = p;
    bad.P = {{0.5, 0.5}, {1.0, 0.0}};
    CHECK_THROWS_AS(bad.validate(1, 1), DataError);  // self-transition

    bad = p;
    bad.sigma2 = {1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(1, 1), DataError);

    bad = p;
    bad.rho = {{0.9, 0.2}};
    CHECK_THROWS_AS(bad.validate(1, 1), DataError);

    // Single-state models keep an all-zero transition row.
    ModelParams one;
    one.M = 1;
    one.mu = {0.0};
    one.sigma2 = {1.0};
    one.rho = {{1.0}};
    one.P = {{0.0}};
    one.B = {{0.0}};
    CHECK_NOTHROW(one.validate(1, 1));
}
