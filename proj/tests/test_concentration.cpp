#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "ermlab/bounds.hpp"
#include "ermlab/checks.hpp"
#include "ermlab/concentration.hpp"
#include "ermlab/errors.hpp"
#include "ermlab/rng.hpp"
#include "test_support.hpp"

using namespace ermlab;
using namespace ermlab::testing;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// P(0 <= Z_1 <= b ||Z_{-1}||) for a standard normal vector in R^p:
// (1/2) P(Z_1^2 / (Z_1^2 + chi2_{p-1}) <= b^2/(1+b^2)).
double exact_cone(int p, double b) {
    return 0.5 * boost::math::ibeta(0.5, 0.5 * (p - 1), b * b / (1.0 + b * b));
}

}  // namespace

TEST_CASE("Liebscher bound worked value and limits") {
    const double v = liebscher_bernstein(1000, 0.1, 10, 2.5, std::exp(-10.0), 1.0);
    const double oracle = 4.0 * std::exp(-10000.0 / (16000.0 + 8.0 / 3.0 * 1000.0)) + 400.0 * std::exp(-10.0);
    CHECK(rel_err(v, oracle) < 1e-12);
    CHECK(v == doctest::Approx(2.36).epsilon(1e-2));
    CHECK(liebscher_bernstein(1000, 1e6, 1, 1, 0, 1) < 1e-12);
    CHECK_THROWS_AS((void)liebscher_bernstein(1000, 0.01, 10, 1, 0, 1), BlockingCondition);
    CHECK_THROWS_AS((void)liebscher_bernstein(1000, 0.1, 0.5, 1, 0, 1), BlockingCondition);
    CHECK_THROWS_AS((void)liebscher_bernstein(1000, 0.1, 2000, 1, 0, 1), BlockingCondition);
}

TEST_CASE("covariance inequalities") {
    CHECK(davydov_cov_bound(0.0, 4.0, 1.0, 1.0) == 0.0);
    const double z4 = std::pow(3.0, 0.25);
    CHECK(rel_err(davydov_cov_bound(0.25, 4.0, z4, z4), 4.0 * 2.0 * 0.5 * std::sqrt(3.0)) < 1e-12);
    CHECK(davydov_cov_bound(0.25, 4.0, z4, z4) >= 0.5);
    CHECK_THROWS_AS((void)davydov_cov_bound(0.1, 2.0, 1.0, 1.0), DomainError);
    CHECK(billingsley_cov_bound(0.0) == 0.0);
    CHECK(billingsley_cov_bound(0.25) == 1.0);
    CHECK(ibragimov_bound(0.0, 3.0) == 0.0);
    CHECK(rel_err(ibragimov_bound(0.125, 2.0), 2.0 * ibragimov_bound(0.125, 1.0)) < 1e-15);
    CHECK(rel_err(ibragimov_bound(0.125, std::sqrt(2.0)), 6.0 * std::sqrt(0.125) * std::sqrt(2.0)) < 1e-15);

    Engine engine = make_engine(9);
    std::uniform_real_distribution<double> u(0.0, 0.25);
    for (int k = 0; k < 100; ++k) {
        const double a = u(engine), b = u(engine);
        const double lo = std::min(a, b), hi = std::max(a, b);
        const double r = 2.5 + 20.0 * u(engine);
        CHECK(davydov_cov_bound(lo, r, 1.0, 1.0) <= davydov_cov_bound(hi, r, 1.0, 1.0));
        CHECK(billingsley_cov_bound(lo) <= billingsley_cov_bound(hi));
        CHECK(ibragimov_bound(lo, 1.0) <= ibragimov_bound(hi, 1.0));
    }
}

TEST_CASE("Paley-Zygmund bound") {
    CHECK(paley_zygmund_bound(1.0, 3.0, 1.0) == 0.0);
    CHECK(rel_err(paley_zygmund_bound(1.0, 3.0, 0.5), 1.0 / 12.0) < 1e-15);
    CHECK(rel_err(paley_zygmund_bound(1.0, 9.0, 0.5), 0.25 / 9.0) < 1e-15);
    CHECK_THROWS_AS((void)paley_zygmund_bound(1.0, 0.5, 0.5), DomainError);
    CHECK_THROWS_WITH((void)paley_zygmund_bound(2.0, 3.0, 0.5), doctest::Contains("Cauchy-Schwarz"));
    Engine engine = make_engine(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double m2 = 0.1 + u(engine);
        CHECK(paley_zygmund_bound(m2, m2 * m2 * (1.0 + 5.0 * u(engine)), u(engine)) <= 1.0);
    }
    // P(Z^2 > 1/2) = 2 (1 - Phi(sqrt(1/2))).
    const double truth = 2.0 * (1.0 - normal_cdf(std::sqrt(0.5)));
    CHECK(truth == doctest::Approx(0.4795).epsilon(1e-3));
    const InequalityCheck c = falsify_paley_zygmund(kInf, 0.5, 200'000, 1);
    CHECK(c.passed);
    CHECK(std::abs(c.empirical_value - truth) <= 4.0 * c.se);
    const InequalityCheck t = falsify_paley_zygmund(5.0, 0.5, 200'000, 2);
    CHECK(t.passed);
    CHECK(t.bound_value == doctest::Approx(0.25 / 9.0));
}

TEST_CASE("cone probability") {
    CHECK(rel_err(cone_probability_bound(2, 1.0), std::sqrt(std::numbers::pi) / 2.0) < 1e-15);
    CHECK(cone_probability_bound(50, 0.01) == doctest::Approx(0.0443).epsilon(1e-3));
    CHECK(exact_cone(2, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(cone_probability_bound(10, 1.0) > 1.0);  // reported as is, never clamped
    CHECK_THROWS_AS((void)cone_probability_bound(1, 1.0), DomainError);
    CHECK_THROWS_AS((void)cone_probability_bound(2, 0.0), DomainError);
    CHECK(cone_probability_bound(2, 1e-9) < 1e-8);

    const InequalityCheck c = falsify_cone_probability(50, 0.01, 200'000, 4);
    CHECK(c.passed);
    CHECK_FALSE(c.vacuous);
    const InequalityCheck big = falsify_cone_probability(10, 1.0, 10'000, 4);
    CHECK(big.vacuous);
    // The a = 0 arm of the grid is estimated against the incomplete-beta oracle.
    const InequalityCheck two = falsify_cone_probability(2, 1.0, 200'000, 5);
    CHECK(two.empirical_value >= exact_cone(2, 1.0) - 4.0 * two.se);
}

TEST_CASE("covering numbers") {
    CHECK(covering_number_bound(3, 1.0, 2.0) == doctest::Approx(8.0));
    CHECK(covering_number_bound(2, 1.0, 1.0) == doctest::Approx(9.0));
    CHECK(covering_number_bound(3, 1.0, 1.0) > covering_number_bound(2, 1.0, 1.0));
    CHECK(covering_number_bound(2, 1.0, 0.5) > covering_number_bound(2, 1.0, 1.0));
    Eigen::MatrixXd pts(3, 1);
    pts << 0.0, 0.5, 2.0;
    CHECK(greedy_net_size(pts, 1.0) == 2);
    for (int p = 1; p <= 4; ++p) {
        for (double delta : {0.5, 1.0}) {
            CAPTURE(p);
            CAPTURE(delta);
            const InequalityCheck c = falsify_covering_number(p, 0.8, delta, 5000, 6);
            CHECK(c.passed);
        }
    }
}

TEST_CASE("heavy-tailed vector concentration") {
    HeavyTailInputs in;
    in.K_m = 1.0;
    in.r_m = 4.0;
    in.K_alpha = kInf;
    in.K_p = 3.0;
    in.r_p = 0.0;
    in.T = 10'000;
    const HeavyTailBound b = heavy_tail_vector_tail(in);
    CHECK(b.sigma == doctest::Approx(1.0));
    CHECK(b.p == 3);
    CHECK(rel_err(b.threshold, 12.0 * std::sqrt(3.0 * std::log(1e4) / 1e4)) < 1e-12);
    CHECK(rel_err(b.probability, 3.0 * 3.0 * 16.0 / std::log(1e4)) < 1e-12);
    in.r_p = 1.0;
    CHECK_THROWS_AS((void)heavy_tail_vector_tail(in), AssumptionViolation);

    const InequalityCheck c = falsify_heavy_tail_vector(0.3, 5000, 3, 200, 7);
    CHECK(c.passed);
    CHECK(c.empirical_value == 0.0);

    const TruncationSchedule s = truncation_schedule(10'000, 0.2, 6.0);
    const double logT = std::log(1e4);
    const double bT = std::pow(std::pow(1e4, 0.7) * std::sqrt(logT), 0.2);
    CHECK(rel_err(s.b_T, bT) < 1e-12);
    CHECK(s.M_T == static_cast<long>(std::floor(100.0 / (bT * std::sqrt(logT)))));

    const BernoulliThreshold bt = bernoulli_threshold(10'000, 4, 1.0, 1.0);
    CHECK(rel_err(bt.sigma2, 0.25 + 8.0 / (std::exp(1.0) - 1.0)) < 1e-12);
    const double K2 = 64.0 * bt.sigma2;
    const double eps = std::sqrt(1.5 * K2 * 4.0 * logT / 100.0) + std::sqrt(K2 * logT / 100.0);
    CHECK(rel_err(bt.eps_T, eps) < 1e-12);
    CHECK(bt.M_T == 100);
}

TEST_CASE("dependence falsifiers on Gaussian AR(1)") {
    const InequalityCheck d = falsify_davydov(0.5, 1, 4.0, 200'000, 1);
    CHECK(d.passed);
    CHECK(std::abs(d.empirical_value - 0.5) <= 4.0 * d.se);
    const InequalityCheck b = falsify_billingsley(0.5, 2, 200'000, 2);
    CHECK(b.passed);
    // Cov(1{Z>0}, 1{W>0}) = arcsin(rho) / (2 pi) for a Gaussian pair.
    CHECK(std::abs(b.empirical_value - std::asin(0.25) / (2.0 * std::numbers::pi)) <= 4.0 * b.se);
    const InequalityCheck i = falsify_ibragimov(0.5, 3, 200'000, 3);
    CHECK(i.passed);
    // E|Z^2 - 1| = 4 phi_N(1), the standard normal density at 1.
    const double abs_centered = 4.0 * std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
    CHECK(std::abs(i.empirical_value - std::pow(0.5, 6) * abs_centered) <= 4.0 * i.se);
    CHECK(rel_err(i.bound_value, 6.0 * std::sqrt(0.125) * std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("Liebscher falsifiers") {
    const InequalityCheck r = falsify_liebscher_rademacher(10'000, 0.05, 2000, 8);
    CHECK(r.passed);
    CHECK(r.vacuous == (r.bound_value >= 1.0));
    // Tail that is not negligible: sd of the sum is sqrt(T) = 100.
    const InequalityCheck tight = falsify_liebscher_rademacher(10'000, 0.02, 2000, 9);
    CHECK(tight.passed);
    CHECK(tight.empirical_value > 0.0);
    const InequalityCheck informative = falsify_liebscher_rademacher(10'000, 0.15, 2000, 11);
    CHECK_FALSE(informative.vacuous);
    CHECK(informative.bound_value < 0.2);
    CHECK(informative.passed);
    const InequalityCheck m = falsify_liebscher_mixing(2000, 0.1, 0.5, 5, 1000, 10);
    CHECK(m.passed);
}

TEST_CASE("make_check orientation") {
    const auto up = make_check("u", false, 1.0, 0.5, 0.1, 10, true);
    CHECK(up.margin == doctest::Approx(0.5));
    CHECK(up.passed);
    const auto low = make_check("l", true, 0.5, 0.2, 0.1, 10, true);
    CHECK(low.margin == doctest::Approx(-0.3));
    CHECK(low.passed);  // within 3 se
    const auto fail = make_check("l", true, 0.5, 0.1, 0.1, 10, true);
    CHECK_FALSE(fail.passed);
    CHECK(make_check("v", false, 2.0, 0.0, 0.0, 1, true).vacuous);
    CHECK_FALSE(make_check("v", false, 2.0, 0.0, 0.0, 1, false).vacuous);
}

TEST_CASE("named check registry") {
    const auto names = check_names();
    CHECK(names.size() == 11);
    for (const auto& n : names) {
        CAPTURE(n);
        CheckOptions o;
        o.draws = n == "small_ball" ? 10'000 : 2'000;
        if (n == "heavy_tail_vector") o.draws = 20;
        const InequalityCheck c = run_named_check(n, o);
        CHECK(c.passed);
    }
    CheckOptions bad;
    bad.params["nope"] = 1.0;
    CHECK_THROWS_AS((void)run_named_check("davydov", bad), ConfigError);
    CHECK_THROWS_AS((void)run_named_check("no_such_check"), ConfigError);
    CheckOptions one_draw;
    one_draw.draws = 1;
    CHECK_THROWS_AS((void)run_named_check("davydov", one_draw), ConfigError);
}
