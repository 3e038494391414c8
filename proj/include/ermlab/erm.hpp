#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "ermlab/dgp.hpp"

namespace ermlab {

struct PredictionRule {
    Eigen::VectorXd theta;
};

/// R(theta) = R(theta*) + excess, where excess is the average squared L2
/// distance between the oracle forecast and the forecast of theta.
struct RiskDecomposition {
    double risk_at_theta = 0.0;
    double oracle_risk = 0.0;
    double excess = 0.0;
};

/// Designs with condition number above this are treated as singular.
inline constexpr double kMaxCondition = 1e12;

/// Least-squares minimizer of (1/T) sum (Y_t - theta'X_t)^2 via a
/// column-pivoted Householder QR of X. Throws SingularDesign (carrying `seed`)
/// if X is numerically rank deficient.
PredictionRule fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                 std::uint64_t seed = 0);

PredictionRule fit_erm(const Sample& sample);

double empirical_risk(const Sample& sample, const PredictionRule& rule);
double empirical_risk(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                      const Eigen::VectorXd& theta);

/// -(2/T) X'(Y - X theta).
Eigen::VectorXd empirical_risk_gradient(const Sample& sample, const Eigen::VectorXd& theta);

/// (1/T) sum_t Sigma_t over t = 1..T.
Eigen::MatrixXd average_covariance(const Dgp& dgp, int T);

/// Solves sigma_bar theta = cross_moment; throws AssumptionViolation when
/// sigma_bar is not positive definite.
Eigen::VectorXd solve_oracle(const Eigen::MatrixXd& sigma_bar, const Eigen::VectorXd& cross_moment);

/// Population risk minimizer over a horizon of T periods.
PredictionRule oracle_rule(const Dgp& dgp, int T);

/// Analytic average risk decomposition of theta over periods 1..T. Because the
/// analytic risk depends on theta only, this is also the conditional risk of an
/// estimate fitted on an independent copy of the data.
RiskDecomposition population_risk(const Dgp& dgp, const PredictionRule& rule, int T);

/// |E(Y - f*)^2 + E(f* - f_theta)^2 - E(Y - f_theta)^2|, averaged over 1..T,
/// with the right-hand side evaluated from raw second moments of (Y, X).
double pythagorean_check(const Dgp& dgp, const PredictionRule& rule, int T);

/// Unconditional out-of-sample risk over H fresh periods (stationary DGPs only).
double oos_risk(const Dgp& dgp, const PredictionRule& rule, int H);

/// Out-of-sample risk over periods T+1..T+H conditional on the latent state at T.
double conditional_oos_risk(const Dgp& dgp, const PredictionRule& rule, int H,
                            const LatentState& state);

struct MonteCarloEstimate {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

/// Forward-simulation estimate of the out-of-sample risk. With a state the paths
/// start from it; without one each path starts from a fresh stationary state.
MonteCarloEstimate oos_risk_mc(const Dgp& dgp, const PredictionRule& rule, int H,
                               const std::optional<LatentState>& state, int n_paths,
                               std::uint64_t seed);

/// E |R_oos(theta | state) - R_oos(theta)| over stationary conditioning states.
MonteCarloEstimate oos_dependence_gap(const Dgp& dgp, const PredictionRule& rule, int H,
                                      int n_states, std::uint64_t seed);

}  // namespace ermlab
