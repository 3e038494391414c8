#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ermlab/bounds.hpp"
#include "ermlab/dgp.hpp"
#include "ermlab/errors.hpp"
#include "test_support.hpp"

using namespace ermlab;
using namespace ermlab::testing;

namespace {

std::vector<DgpSpec> assorted_specs() {
    std::vector<DgpSpec> specs;
    auto iid = make_spec(DgpKind::gaussian_iid, 3);
    iid.sigma_base = toeplitz(3, 0.4);
    specs.push_back(iid);
    auto ar = make_spec(DgpKind::gaussian_ar1, 3, 0.5);
    ar.sigma_base = toeplitz(3, 0.4);
    specs.push_back(ar);
    specs.push_back(make_spec(DgpKind::student_t_ar1, 3, 0.5, 6.0, 0.7));
    specs.push_back(make_spec(DgpKind::factor_model, 3, 0.3));
    specs.push_back(make_spec(DgpKind::heterogeneous_sin, 3, 0.5, kInf, 1.0, 0.5));
    return specs;
}

// Time average of Sigma_t over 1..T.
Eigen::MatrixXd mean_covariance(const Dgp& dgp, int T) {
    double s = 0.0;
    for (int t = 1; t <= T; ++t) s += dgp.spec.scale_at(t, T);
    return (s / T) * dgp.truth.sigma;
}

}  // namespace

TEST_CASE("identity covariance gives unit eigenvalue envelope") {
    const Dgp d = make_dgp(make_spec(DgpKind::gaussian_iid, 2));
    CHECK(d.truth.lambda_min == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.truth.lambda_max == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.truth.K_Sigma == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::isinf(d.truth.K_alpha));
}

TEST_CASE("AR(1) mixing envelope is |phi|^l") {
    const Dgp d = make_dgp(make_spec(DgpKind::gaussian_ar1, 2, 0.5));
    CHECK(d.truth.K_alpha == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(d.truth.r_alpha == 1.0);
    CHECK_FALSE(d.truth.mixing_via_latent_chain);
    const Dgp t = make_dgp(make_spec(DgpKind::student_t_ar1, 2, -0.5, 6.0));
    CHECK(t.truth.K_alpha == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(t.truth.mixing_via_latent_chain);
}

TEST_CASE("Gaussian small-ball constants at theta = 1/2") {
    const Dgp d = make_dgp(make_spec(DgpKind::gaussian_ar1, 3, 0.2));
    CHECK(d.truth.kappa1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(d.truth.kappa2 == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    // t_5 has kurtosis 3 (nu - 2)/(nu - 4) = 9.
    const Dgp t = make_dgp(make_spec(DgpKind::student_t_ar1, 3, 0.2, 5.0));
    CHECK(t.truth.kappa2 == doctest::Approx(0.25 / 9.0).epsilon(1e-15));
    const Dgp custom = make_dgp(make_spec(DgpKind::gaussian_iid, 3), 0.25);
    CHECK(custom.truth.kappa1 == doctest::Approx(0.5));
    CHECK(custom.truth.kappa2 == doctest::Approx(0.75 * 0.75 / 3.0));
}

TEST_CASE("moment order and norms") {
    CHECK(moment_order_for(kInf) == 8.0);
    CHECK(moment_order_for(6.0) == 5.5);
    CHECK(moment_order_for(20.0) == 8.0);
    // E|Z|^4 = 3, E|Z|^2 = 1.
    CHECK(gaussian_abs_moment_norm(4.0) == doctest::Approx(std::pow(3.0, 0.25)).epsilon(1e-13));
    CHECK(gaussian_abs_moment_norm(2.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(student_t_abs_moment_norm(6.0, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
    // Unit-variance t_nu: E X^4 = 3 (nu - 2)/(nu - 4).
    CHECK(std::pow(student_t_abs_moment_norm(7.0, 4.0), 4) == doctest::Approx(3.0 * 5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ground truth invariants hold across specs") {
    for (const auto& spec : assorted_specs()) {
        CAPTURE(to_string(spec.kind));
        const Dgp d = make_dgp(spec);
        const GroundTruth& g = d.truth;
        CHECK(g.K_m >= 1.0);
        CHECK(g.r_m > 2.0);
        CHECK(g.K_Sigma == doctest::Approx(g.lambda_max / g.lambda_min).epsilon(1e-12));
        CHECK(g.kappa1 > 0.0);
        CHECK(g.kappa2 > 0.0);
        CHECK(g.kappa2 <= 1.0);
        CHECK(g.lambda_min <= g.lambda_max);
        CHECK(g.lambda_max <= g.K_m * g.K_m * spec.p);
    }
}

TEST_CASE("factor model adds a unit-loading factor") {
    const Dgp d = make_dgp(make_spec(DgpKind::factor_model, 4, 0.3));
    const Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(4, 4) + Eigen::MatrixXd::Ones(4, 4);
    CHECK((d.truth.sigma - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(d.truth.lambda_max == doctest::Approx(5.0));
}

TEST_CASE("heterogeneous envelope scales with the amplitude") {
    const Dgp d = make_dgp(make_spec(DgpKind::heterogeneous_sin, 2, 0.0, kInf, 1.0, 0.5));
    CHECK(d.truth.lambda_min == doctest::Approx(0.5));
    CHECK(d.truth.lambda_max == doctest::Approx(1.5));
    CHECK(d.spec.scale_at(250, 1000) == doctest::Approx(1.5));
}

TEST_CASE("validation rejects inadmissible specs") {
    auto bad = make_spec(DgpKind::gaussian_ar1, 2, 0.5);
    bad.sigma_base << 1.0, 2.0, 2.0, 1.0;
    try {
        (void)make_dgp(bad);
        FAIL("expected an assumption violation");
    } catch (const AssumptionViolation& e) {
        CHECK(e.assumption() == "Assumption 4");
    }
    auto asym = make_spec(DgpKind::gaussian_ar1, 2, 0.5);
    asym.sigma_base(0, 1) = 1e-6;
    CHECK_THROWS_AS((void)make_dgp(asym), DomainError);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::gaussian_ar1, 2, 1.0)), AssumptionViolation);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::student_t_ar1, 2, 0.5, 4.0)), AssumptionViolation);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::student_t_ar1, 2, 0.5)), AssumptionViolation);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::gaussian_iid, 2, 0.5)), DomainError);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::heterogeneous_sin, 2, 0.0, kInf, 1.0, 1.0)),
                    AssumptionViolation);
    CHECK_THROWS_AS((void)make_dgp(make_spec(DgpKind::gaussian_ar1, 2, 0.5, kInf, -1.0)), DomainError);
}

TEST_CASE("generate guards T <= p") {
    const Dgp d = make_dgp(make_spec(DgpKind::gaussian_iid, 5));
    CHECK_THROWS_AS((void)generate(d, 5, 1), DomainError);
    CHECK_NOTHROW((void)generate(d, 6, 1));
}

TEST_CASE("noiseless samples satisfy Y = X theta exactly") {
    for (auto spec : assorted_specs()) {
        spec.noise_sd = 0.0;
        const Dgp d = make_dgp(spec);
        const Sample s = generate(d, 200, 7);
        CHECK((s.Y - s.X * spec.theta_star).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("generation is deterministic in the seed") {
    for (const auto& spec : assorted_specs()) {
        const Dgp d = make_dgp(spec);
        const Sample a = generate(d, 300, 99);
        const Sample b = generate(d, 300, 99);
        const Sample c = generate(d, 300, 100);
        CHECK(a.X == b.X);
        CHECK(a.Y == b.Y);
        CHECK(a.X != c.X);
        CHECK(a.X.allFinite());
        CHECK(a.Y.allFinite());
        CHECK(a.seed == 99);
    }
}

TEST_CASE("AR(1) lag-1 autocorrelation") {
    const Dgp d = make_dgp(make_spec(DgpKind::gaussian_ar1, 1, 0.5));
    const Sample s = generate(d, 100'000, 2024);
    const Eigen::VectorXd x = s.X.col(0);
    const double mean = x.mean();
    const Eigen::ArrayXd c = x.array() - mean;
    const double rho = (c.head(c.size() - 1) * c.tail(c.size() - 1)).sum() / c.square().sum();
    CHECK(std::abs(rho - 0.5) < 0.01);
}

TEST_CASE("second moments match the covariance within 3 standard errors") {
    const int T = 100'000;
    for (const auto& spec : assorted_specs()) {
        CAPTURE(to_string(spec.kind));
        const Dgp d = make_dgp(spec);
        const Sample s = generate(d, T, 31337);
        const Eigen::MatrixXd target = mean_covariance(d, T);
        const double phi2 = spec.ar_coeff * spec.ar_coeff;
        // Products of a Gaussian AR(1) pair have lag-l autocorrelation phi^{2l}.
        const double inflation = std::sqrt((1.0 + phi2) / (1.0 - phi2));
        for (int i = 0; i < spec.p; ++i) {
            for (int j = i; j < spec.p; ++j) {
                const Eigen::ArrayXd prod = s.X.col(i).array() * s.X.col(j).array();
                const double m = prod.mean();
                const double sd = std::sqrt((prod - m).square().sum() / (T - 1));
                const double se = inflation * sd / std::sqrt(static_cast<double>(T));
                CAPTURE(i);
                CAPTURE(j);
                CHECK(std::abs(m - target(i, j)) <= 3.0 * se);
            }
        }
        // Noise L2 norm.
        const Eigen::ArrayXd eps = (s.Y - s.X * spec.theta_star).array();
        const Eigen::ArrayXd sq = eps.square();
        const double m2 = sq.mean();
        const double se2 = inflation * std::sqrt((sq - m2).square().sum() / (T - 1)) / std::sqrt(double(T));
        CHECK(std::abs(m2 - spec.noise_sd * spec.noise_sd) <= 3.0 * se2);
    }
}

TEST_CASE("t predictors are heavier tailed than Gaussian") {
    const Dgp d = make_dgp(make_spec(DgpKind::student_t_ar1, 2, 0.3, 6.0));
    const Sample s = generate(d, 100'000, 5);
    for (int i = 0; i < 2; ++i) {
        const Eigen::ArrayXd x = s.X.col(i).array();
        const double m2 = x.square().mean();
        const double m4 = x.square().square().mean();
        CHECK(m4 / (m2 * m2) > 3.0);
    }
}

TEST_CASE("marginal draws and forward simulation have the stationary covariance") {
    const Dgp d = make_dgp(make_spec(DgpKind::student_t_ar1, 2, 0.6, 8.0));
    Engine engine = make_engine(11);
    const Eigen::MatrixXd X = draw_marginal(d, 200'000, engine);
    const Eigen::MatrixXd S = X.transpose() * X / static_cast<double>(X.rows());
    CHECK((S - d.truth.sigma).cwiseAbs().maxCoeff() < 0.03);

    const LatentState st = draw_latent_state(d, engine);
    auto [Xf, Yf] = simulate_forward(d, st, 5, engine);
    CHECK(Xf.rows() == 5);
    CHECK(Yf.size() == 5);
}

TEST_CASE("family instantiation") {
    DgpFamily f;
    f.kind = DgpKind::gaussian_ar1;
    f.ar_coeff = 0.5;
    f.covariance.kind = CovarianceRule::Kind::toeplitz;
    f.covariance.rho = 0.5;
    f.coefficients.kind = CoefficientRule::Kind::harmonic;
    CHECK_FALSE(f.fixed_dimension().has_value());
    const DgpSpec s = f.instantiate(4);
    CHECK(s.p == 4);
    CHECK(s.sigma_base(0, 3) == doctest::Approx(0.125));
    CHECK(s.theta_star(3) == doctest::Approx(0.25));
    f.coefficients.kind = CoefficientRule::Kind::explicit_vector;
    f.coefficients.values = Eigen::VectorXd::Ones(3);
    CHECK(f.fixed_dimension() == 3);
    CHECK_THROWS_AS((void)f.instantiate(4), DomainError);
}
