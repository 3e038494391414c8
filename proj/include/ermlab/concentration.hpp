#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace ermlab {

/// Outcome of one Monte Carlo falsification of an inequality.
///
/// For upper bounds margin = bound - empirical; for lower bounds (Paley-Zygmund,
/// small ball) margin = empirical - bound. A check passes when
/// margin >= -3 se.
struct InequalityCheck {
    std::string name;
    bool lower_bound = false;
    double bound_value = 0.0;
    double empirical_value = 0.0;
    double margin = 0.0;
    double se = 0.0;
    std::int64_t n_samples = 0;
    bool passed = false;
    bool vacuous = false;  ///< an upper bound >= 1 on a probability
};

InequalityCheck make_check(std::string name, bool lower_bound, double bound, double empirical,
                           double se, std::int64_t n_samples, bool probability_bound);

// --- Bound evaluators ------------------------------------------------------

/// Bernstein-type tail bound for P(|sum_{t<=T} Z_t| > T eps) of a centered
/// strongly mixing sequence with |Z_t| <= sup_norm:
///   4 exp(-T^2 eps^2 / (64 (T/M) D + (8/3) sup_norm M T eps)) + 4 (T/M) alpha(M).
/// Throws BlockingCondition unless 1 <= M <= T and 4 sup_norm M < T eps.
double liebscher_bernstein(double T, double eps, double M, double D, double alpha_at_M,
                           double sup_norm);

/// |Cov(A, B)| <= 4 (r/(r-2)) alpha^{1-2/r} ||A||_r ||B||_r.
double davydov_cov_bound(double alpha, double r, double norm_a, double norm_b);

/// |Cov(A, B)| <= 4 alpha for centered variables bounded by 1.
double billingsley_cov_bound(double alpha);

/// ||E[f | past] - E f||_1 <= 6 alpha(h)^{1/2} ||f||_2.
double ibragimov_bound(double alpha_h, double l2_norm);

/// (1 - theta)^2 m2^2 / m4, a lower bound on P(W^2 > theta E W^2).
double paley_zygmund_bound(double second_moment, double fourth_moment, double theta);

/// (1/2) sqrt(pi/2) sqrt(p) b, bound on P(a <= Z_1 <= a + b ||Z_{-1}||_2) for a
/// spherical vector with nonincreasing density generator. Not clamped to 1.
double cone_probability_bound(int p, double b);

/// (1 + 2 / (sqrt(lambda_min) delta))^p.
double covering_number_bound(int p, double lambda_min, double delta);

/// Size of the greedy delta-separated subset of `points` (rows), which is also
/// a delta-net of them.
int greedy_net_size(const Eigen::MatrixXd& points, double delta);

struct HeavyTailInputs {
    double K_m = 1.0;
    double r_m = 4.0;
    double K_alpha = 1.0;
    double r_alpha = 1.0;
    double K_p = 1.0;
    double r_p = 0.0;
    int T = 2;
};

struct HeavyTailBound {
    int p = 0;
    double sigma = 0.0;      ///< sqrt(K_sigma2)
    double threshold = 0.0;  ///< 12 sigma sqrt(p log T / T)
    double probability = 0.0;
    bool vacuous = false;
};

/// Tail bound for ||(1/T) sum Z_t||_2 > 12 sigma sqrt(p log T / T) with
/// probability term 3 K_p (2 K_m)^r_m / (sigma log T).
HeavyTailBound heavy_tail_vector_tail(const HeavyTailInputs& in);

/// Truncation level b_T and block length M_T used by the heavy-tailed vector
/// concentration argument; reported for inspection only.
struct TruncationSchedule {
    double b_T = 0.0;
    long M_T = 0;
};
TruncationSchedule truncation_schedule(int T, double r_p, double r_m);

/// Threshold eps_T of the mixing-Bernoulli concentration statement with
/// K_1 = 3/2 and K_2 = 64 sigma^2, sigma^2 = 1/4 + 8 sum alpha(l).
struct BernoulliThreshold {
    double sigma2 = 0.0;
    double eps_T = 0.0;
    long M_T = 0;  ///< floor(T^{1/(r_alpha+1)})
};
BernoulliThreshold bernoulli_threshold(int T, int p, double K_alpha, double r_alpha);

// --- Monte Carlo falsifiers --------------------------------------------------

/// P(W^2 > theta E W^2) for a standardized t (dof = inf for Gaussian).
InequalityCheck falsify_paley_zygmund(double t_dof, double theta, std::int64_t draws,
                                      std::uint64_t seed);

/// Max over a in {0, 0.1, 0.25, 0.5, 1, 2} of the MC probability of the cone set.
InequalityCheck falsify_cone_probability(int p, double b, std::int64_t draws, std::uint64_t seed);

/// |Cov(Z_t, Z_{t+lag})| for a unit Gaussian AR(1) vs the Davydov bound with
/// alpha = min(|phi|^lag, 1/4) and ||Z||_r norms.
InequalityCheck falsify_davydov(double phi, int lag, double r, std::int64_t draws,
                                std::uint64_t seed);

/// |Cov| of centered exceedance indicators 1{Z > 0} - 1/2 of a Gaussian AR(1).
InequalityCheck falsify_billingsley(double phi, int lag, std::int64_t draws, std::uint64_t seed);

/// L1 gap between E[Z_{t+h}^2 | Z_t] = phi^{2h} (Z_t^2 - 1) + 1 and E Z^2 = 1.
InequalityCheck falsify_ibragimov(double phi, int h, std::int64_t draws, std::uint64_t seed);

/// P(|sum Z_t| > T eps) for i.i.d. Rademacher Z_t with M = 1, D = 1, alpha = 0.
InequalityCheck falsify_liebscher_rademacher(int T, double eps, std::int64_t trials,
                                             std::uint64_t seed);

/// Same tail for centered sign indicators of a Gaussian AR(1) with block
/// length M and D = M (1/4 + 8 sum_{l<M} alpha(l)).
InequalityCheck falsify_liebscher_mixing(int T, double eps, double phi, int M, std::int64_t trials,
                                         std::uint64_t seed);

/// Greedy net on the sphere of radius lambda_min^{-1/2} vs the covering bound.
InequalityCheck falsify_covering_number(int p, double lambda_min, double delta, std::int64_t points,
                                        std::uint64_t seed);

/// Exceedance frequency of ||(1/T) sum eps_t X_t||_2 over the threshold for a
/// gaussian_ar1 DGP with identity covariance and unit noise.
InequalityCheck falsify_heavy_tail_vector(double phi, int T, int p, std::int64_t reps,
                                          std::uint64_t seed);

}  // namespace ermlab
