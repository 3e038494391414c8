#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ermlab/bounds.hpp"
#include "ermlab/dgp.hpp"

namespace ermlab {

struct ExperimentPlan {
    DgpFamily family;
    std::vector<int> T_grid;
    double K_p = 1.0;
    double r_p = 0.0;
    int n_reps = 200;
    std::uint64_t base_seed = 0;
    Theorem theorem = Theorem::thm41;
    std::optional<int> H;
    /// Worker threads; results do not depend on it.
    int threads = 1;

    // Small-ball estimate attached to the report (at the largest grid point).
    double small_ball_theta = 0.5;
    std::int64_t small_ball_draws = 0;  ///< 0 disables the estimate
    int small_ball_directions = 100;
};

/// Throws ConfigError / AssumptionViolation on an inadmissible plan.
void validate(const ExperimentPlan& plan);

struct SkippedReplication {
    int rep = 0;
    std::uint64_t seed = 0;
};

struct CellResult {
    int T = 0;
    int p = 0;
    double median_excess = 0.0;
    double mean_excess = 0.0;
    double q90_excess = 0.0;
    double bound = 0.0;
    double failure_prob = 0.0;
    double violation_freq = 0.0;
    bool vacuous = false;
    int n_used = 0;
    std::vector<SkippedReplication> skipped;
    /// More than 1% of the replications had a singular design.
    bool failed = false;
    BoundCertificate certificate;
};

struct SmallBallEstimate {
    double kappa1 = 0.0;
    double min_freq = 0.0;
    double max_freq = 0.0;
    double se = 0.0;  ///< largest per-direction standard error
    double analytic_kappa2 = 0.0;
    std::int64_t n_draws = 0;
    int n_directions = 0;
    std::vector<double> frequencies;
};

struct ExperimentReport {
    std::vector<CellResult> cells;
    std::optional<double> rate_slope;
    std::optional<SmallBallEstimate> small_ball;
};

ExperimentReport run_experiment(const ExperimentPlan& plan);

/// OLS slope of log median excess on log(p log T / T). Needs four cells with
/// positive median excess.
double rate_regression(const ExperimentReport& report);
double rate_regression(const std::vector<CellResult>& cells);

/// Minimum over random unit directions v of the frequency of
/// |v'X| >= kappa1 sd(v'X) under the stationary marginal of X.
SmallBallEstimate estimate_small_ball(const Dgp& dgp, double kappa1, std::int64_t n_draws,
                                      int n_directions, std::uint64_t seed);

/// Linear-interpolation (type 7) quantile of unsorted data.
double quantile(std::vector<double> values, double q);

}  // namespace ermlab
