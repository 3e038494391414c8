#include "ermlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "ermlab/errors.hpp"

namespace ermlab {

namespace {

constexpr double kTermCutoff = 1e-16;
constexpr long kMaxTerms = 1'000'000;

constexpr double kHeteroSeriesFactor = 128.0;
constexpr double kStationarySeriesFactor = 32.0;

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw DomainError(std::string(name) + " must be strictly positive");
}

// Integral of exp(-c x^r) over [L, inf): Gamma(1/r, c L^r) / (r c^{1/r}).
double tail_integral(double c, double r, double L) {
    const double a = 1.0 / r;
    return boost::math::tgamma(a, c * std::pow(L, r)) / (r * std::pow(c, a));
}

double k_sigma_family(double factor, double K_m, double r_m, double K_alpha, double r_alpha) {
    if (!(r_m > 2.0)) {
        throw AssumptionViolation("Assumption 1", "moment order r_m must exceed 2");
    }
    if (!(K_m >= 1.0)) throw AssumptionViolation("Assumption 1", "K_m must be >= 1");
    const double series = mixing_series(K_alpha, r_alpha, 1.0 - 2.0 / r_m);
    return K_m * K_m * (1.0 + factor * (r_m / (r_m - 2.0)) * series);
}

}  // namespace

std::string_view to_string(Theorem theorem) {
    switch (theorem) {
        case Theorem::thm31: return "thm31";
        case Theorem::thm41: return "thm41";
        case Theorem::thm51: return "thm51";
        case Theorem::benchmark: return "benchmark";
    }
    return "unknown";
}

Theorem theorem_from_string(std::string_view name) {
    for (Theorem t : {Theorem::thm31, Theorem::thm41, Theorem::thm51, Theorem::benchmark}) {
        if (to_string(t) == name) return t;
    }
    throw DomainError("unknown theorem '" + std::string(name) + "'");
}

double mixing_series(double K_alpha, double r_alpha, double exponent) {
    if (!(exponent > 0.0)) throw DomainError("mixing_series: exponent must be > 0");
    if (exponent > 1.0) throw DomainError("mixing_series: exponent must be <= 1");
    require_positive(K_alpha, "K_alpha");
    require_positive(r_alpha, "r_alpha");
    if (std::isinf(K_alpha)) return 0.0;

    const double c = K_alpha * exponent;
    double sum = 0.0;
    long l = 1;
    for (; l <= kMaxTerms; ++l) {
        const double term = std::exp(-c * std::pow(static_cast<double>(l), r_alpha));
        sum += term;
        if (term < kTermCutoff) break;
    }
    // Terms are decreasing, so the remainder after index N is below the integral from N.
    // Slowly decaying envelopes hit the term cap; the bound stays an upper evaluation.
    return sum + tail_integral(c, r_alpha, static_cast<double>(std::min(l, kMaxTerms)));
}

double k_sigma2(double K_m, double r_m, double K_alpha, double r_alpha) {
    return k_sigma_family(kHeteroSeriesFactor, K_m, r_m, K_alpha, r_alpha);
}

double k_sigma2_prime(double K_m, double r_m, double K_alpha, double r_alpha) {
    return k_sigma_family(kStationarySeriesFactor, K_m, r_m, K_alpha, r_alpha);
}

double k_h(double K_m, double lambda_min, double K_alpha, double r_alpha) {
    require_positive(lambda_min, "lambda_min");
    return 24.0 * (K_m * K_m / lambda_min) * mixing_series(K_alpha, r_alpha, 0.5);
}

double max_predictor_growth(double K_alpha, double r_alpha, double r_m) {
    const double mixing_part = std::isinf(K_alpha) ? 1.0 : r_alpha / (r_alpha + 1.0);
    return std::min(mixing_part, (r_m - 2.0) / 2.0);
}

void check_predictor_growth(double r_p, double K_alpha, double r_alpha, double r_m) {
    const double sup = max_predictor_growth(K_alpha, r_alpha, r_m);
    if (!(r_p >= 0.0 && r_p < sup)) {
        throw AssumptionViolation("Assumption 3", "r_p = " + std::to_string(r_p) +
                                                      " is outside the feasible interval [0, " +
                                                      std::to_string(sup) + ")");
    }
}

int predictor_count(double K_p, double r_p, int T) {
    // Tolerate the last-ulp error of pow so that exact integers floor to themselves.
    const double v = K_p * std::pow(static_cast<double>(T), r_p);
    return static_cast<int>(std::floor(v * (1.0 + 1e-12)));
}

void validate(const BoundInputs& in) {
    require_positive(in.K_alpha, "K_alpha");
    require_positive(in.r_alpha, "r_alpha");
    require_positive(in.K_p, "K_p");
    require_positive(in.lambda_min, "lambda_min");
    require_positive(in.kappa1, "kappa1");
    require_positive(in.kappa2, "kappa2");
    if (!(in.K_m >= 1.0)) throw AssumptionViolation("Assumption 1", "K_m must be >= 1");
    if (!(in.r_m > 2.0)) throw AssumptionViolation("Assumption 1", "r_m must exceed 2");
    if (!(in.K_Sigma >= 1.0)) throw DomainError("K_Sigma is a condition number and must be >= 1");
    if (in.T < 2) throw DomainError("T must be >= 2");
    check_predictor_growth(in.r_p, in.K_alpha, in.r_alpha, in.r_m);
    const int expected = predictor_count(in.K_p, in.r_p, in.T);
    if (in.p != expected) {
        throw AssumptionViolation("Assumption 3", "p = " + std::to_string(in.p) +
                                                      " but floor(K_p T^r_p) = " +
                                                      std::to_string(expected));
    }
    if (in.p < 1) throw DomainError("p must be >= 1");
    if (in.H && *in.H < 1) throw DomainError("H must be >= 1");
}

namespace formula {

double oracle_rate(double k, double cond, double lambda_min, double kappa1, double kappa2, double p,
                   double T) {
    const double c = 48.0 / (kappa1 * kappa1 * kappa2);
    return k * (cond / lambda_min) * c * c * p * std::log(T) / T;
}

double thm31_failure(double K_p, double K_m, double r_m, double k_sigma2, double T) {
    return 3.0 * K_p * std::pow(2.0 * K_m, r_m) / (std::sqrt(k_sigma2) * std::log(T));
}

double thm41_failure(double K_p, double K_m, double r_m, double k_sigma2_prime, double T) {
    return 3.0 * K_p * std::pow(K_m, r_m) / (std::sqrt(k_sigma2_prime) * std::log(T));
}

double thm51_failure(double K_p, double K_m, double r_m, double k_sigma2_prime, double T) {
    return (6.0 * K_p * std::pow(K_m, r_m) + 1.0) / (std::sqrt(k_sigma2_prime) * std::log(T));
}

double oos_term(double K_H, double p, double T, double H) { return K_H * p * std::log(T) / H; }

}  // namespace formula

BoundCertificate bound_thm31(const BoundInputs& in) {
    validate(in);
    BoundCertificate c;
    c.theorem = Theorem::thm31;
    c.inputs = in;
    c.K_sigma2 = k_sigma2(in);
    const double cond3 = in.K_Sigma * in.K_Sigma * in.K_Sigma;
    c.bound = formula::oracle_rate(c.K_sigma2, cond3, in.lambda_min, in.kappa1, in.kappa2, in.p, in.T);
    c.failure_prob = formula::thm31_failure(in.K_p, in.K_m, in.r_m, c.K_sigma2, in.T);
    c.vacuous = c.failure_prob >= 1.0;
    return c;
}

BoundCertificate bound_thm41(const BoundInputs& in) {
    validate(in);
    BoundCertificate c;
    c.theorem = Theorem::thm41;
    c.inputs = in;
    c.K_sigma2 = k_sigma2_prime(in);
    c.bound = formula::oracle_rate(c.K_sigma2, 1.0, in.lambda_min, in.kappa1, in.kappa2, in.p, in.T);
    c.failure_prob = formula::thm41_failure(in.K_p, in.K_m, in.r_m, c.K_sigma2, in.T);
    c.vacuous = c.failure_prob >= 1.0;
    return c;
}

BoundCertificate bound_thm51(const BoundInputs& in) {
    if (!in.H) throw DomainError("thm51 requires the horizon H");
    if (!(in.r_m > 4.0)) {
        throw AssumptionViolation("Assumption 1'", "out-of-sample bound needs r_m > 4");
    }
    BoundCertificate c = bound_thm41(in);
    c.theorem = Theorem::thm51;
    c.K_H = k_h(in.K_m, in.lambda_min, in.K_alpha, in.r_alpha);
    c.oos_term = formula::oos_term(*c.K_H, in.p, in.T, *in.H);
    c.bound += *c.oos_term;
    c.failure_prob = formula::thm51_failure(in.K_p, in.K_m, in.r_m, c.K_sigma2, in.T);
    c.vacuous = c.failure_prob >= 1.0;
    return c;
}

BoundCertificate certificate(Theorem theorem, const BoundInputs& inputs) {
    switch (theorem) {
        case Theorem::thm31: return bound_thm31(inputs);
        case Theorem::thm41: return bound_thm41(inputs);
        case Theorem::thm51: return bound_thm51(inputs);
        case Theorem::benchmark: break;
    }
    throw DomainError("the benchmark certificate takes BenchmarkInputs");
}

double bound_benchmark(double sigma2, double kappa1, double kappa2, double p, double T, double x) {
    require_positive(sigma2, "sigma2");
    require_positive(kappa1, "kappa1");
    require_positive(kappa2, "kappa2");
    require_positive(x, "x");
    if (!(T > 160000.0 * p / (kappa2 * kappa2))) {
        throw DomainError("benchmark regime not reached: need T > 400^2 p / kappa2^2");
    }
    const double c = 16.0 / (kappa1 * kappa1 * kappa2);
    return sigma2 * c * c * (p / T) * x;
}

double benchmark_probability(double kappa2, double T, double x) {
    return 1.0 - std::exp(-kappa2 * T / 4.0) - 1.0 / x;
}

BoundCertificate benchmark_certificate(const BenchmarkInputs& in) {
    BoundCertificate c;
    c.theorem = Theorem::benchmark;
    c.K_sigma2 = in.sigma2;
    c.bound = bound_benchmark(in.sigma2, in.kappa1, in.kappa2, in.p, in.T, in.x);
    c.failure_prob = 1.0 - benchmark_probability(in.kappa2, in.T, in.x);
    c.vacuous = c.failure_prob >= 1.0;
    c.benchmark_inputs = in;
    return c;
}

}  // namespace ermlab
