#pragma once

#include <optional>
#include <string_view>

namespace ermlab {

enum class Theorem { thm31, thm41, thm51, benchmark };

std::string_view to_string(Theorem theorem);
Theorem theorem_from_string(std::string_view name);

/// Constants entering the oracle-inequality certificates.
///
/// K_alpha may be +infinity (no serial dependence). p must equal
/// floor(K_p T^r_p) and r_p must satisfy the predictor-growth restriction.
struct BoundInputs {
    double K_m = 1.0;
    double r_m = 4.0;
    double K_alpha = 1.0;
    double r_alpha = 1.0;
    double K_p = 1.0;
    double r_p = 0.0;
    double lambda_min = 1.0;
    double K_Sigma = 1.0;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    int T = 2;
    int p = 1;
    std::optional<int> H;
};

struct BenchmarkInputs {
    double sigma2 = 1.0;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double p = 1.0;
    double T = 1.0;
    double x = 1.0;
};

struct BoundCertificate {
    Theorem theorem = Theorem::thm31;
    double K_sigma2 = 0.0;  ///< K_sigma2 (thm31), K'_sigma2 (thm41/51), sigma^2 (benchmark)
    double bound = 0.0;
    double failure_prob = 0.0;
    bool vacuous = false;
    /// thm51 only: K_H and the horizon term K_H p log(T) / H.
    std::optional<double> K_H;
    std::optional<double> oos_term;
    BoundInputs inputs;
    std::optional<BenchmarkInputs> benchmark_inputs;
};

/// sum_{l >= 1} exp(-K_alpha l^r_alpha)^exponent, summed until a term drops
/// below 1e-16, plus the integral bound on the remainder. Always an upper
/// evaluation of the series.
double mixing_series(double K_alpha, double r_alpha, double exponent);

/// K_m^2 (1 + 128 r_m/(r_m-2) sum alpha(l)^{1-2/r_m}).
double k_sigma2(double K_m, double r_m, double K_alpha, double r_alpha);
/// Stationary version with 32 in place of 128.
double k_sigma2_prime(double K_m, double r_m, double K_alpha, double r_alpha);
inline double k_sigma2(const BoundInputs& in) { return k_sigma2(in.K_m, in.r_m, in.K_alpha, in.r_alpha); }
inline double k_sigma2_prime(const BoundInputs& in) {
    return k_sigma2_prime(in.K_m, in.r_m, in.K_alpha, in.r_alpha);
}

/// K_H = 24 (K_m^2 / lambda_min) sum alpha(l)^{1/2}.
double k_h(double K_m, double lambda_min, double K_alpha, double r_alpha);

/// Supremum of admissible r_p: min(r_alpha/(r_alpha+1), (r_m-2)/2). The mixing
/// part is 1 when K_alpha is infinite.
double max_predictor_growth(double K_alpha, double r_alpha, double r_m);

/// Throws AssumptionViolation("Assumption 3") unless 0 <= r_p < max_predictor_growth.
void check_predictor_growth(double r_p, double K_alpha, double r_alpha, double r_m);

/// floor(K_p T^r_p).
int predictor_count(double K_p, double r_p, int T);

void validate(const BoundInputs& inputs);

/// Closed forms, usable at real-valued T and p.
namespace formula {

/// k (cond / lambda_min) (48 / (kappa1^2 kappa2))^2 p log(T) / T.
double oracle_rate(double k, double cond, double lambda_min, double kappa1, double kappa2, double p,
                   double T);
/// 3 K_p (2 K_m)^r_m / (sqrt(K_sigma2) log T).
double thm31_failure(double K_p, double K_m, double r_m, double k_sigma2, double T);
/// 3 K_p K_m^r_m / (sqrt(K'_sigma2) log T).
double thm41_failure(double K_p, double K_m, double r_m, double k_sigma2_prime, double T);
/// (6 K_p K_m^r_m + 1) / (sqrt(K'_sigma2) log T).
double thm51_failure(double K_p, double K_m, double r_m, double k_sigma2_prime, double T);
/// K_H p log(T) / H.
double oos_term(double K_H, double p, double T, double H);

}  // namespace formula

/// Heterogeneous-data certificate.
BoundCertificate bound_thm31(const BoundInputs& inputs);
/// Stationary certificate; no condition-number factor.
BoundCertificate bound_thm41(const BoundInputs& inputs);
/// Out-of-sample certificate; needs H and r_m > 4.
BoundCertificate bound_thm51(const BoundInputs& inputs);
BoundCertificate certificate(Theorem theorem, const BoundInputs& inputs);

/// i.i.d. benchmark: sigma2 (16/(kappa1^2 kappa2))^2 (p/T) x, valid for
/// T > 400^2 p / kappa2^2. Throws DomainError("benchmark regime not reached") otherwise.
double bound_benchmark(double sigma2, double kappa1, double kappa2, double p, double T, double x);
/// Companion probability 1 - exp(-kappa2 T / 4) - 1/x.
double benchmark_probability(double kappa2, double T, double x);

BoundCertificate benchmark_certificate(const BenchmarkInputs& in);

}  // namespace ermlab
