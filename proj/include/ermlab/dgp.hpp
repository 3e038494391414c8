#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "ermlab/rng.hpp"

namespace ermlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DgpKind { gaussian_iid, gaussian_ar1, student_t_ar1, factor_model, heterogeneous_sin };

std::string_view to_string(DgpKind kind);
DgpKind dgp_kind_from_string(std::string_view name);

/// Full description of a data-generating process.
///
/// All families share one latent construction: a stationary Gaussian
/// VAR(1) G_t = phi G_{t-1} + sqrt(1 - phi^2) u_t with Cov(G_t) = Sigma, and an
/// independent scalar AR(1) e_t with unit variance and the same phi.
///
///   gaussian_iid / gaussian_ar1 : X_t = G_t,  eps_t = noise_sd e_t
///   factor_model                : as gaussian_ar1 with Sigma = sigma_base + 1 1'
///                                 (one pervasive unit-loading factor)
///   student_t_ar1               : X_t = c G_t w_t, eps_t = noise_sd c e_t w'_t with
///                                 w = (V/nu)^{-1/2}, V ~ chi2(nu) i.i.d. in t and
///                                 c = sqrt((nu-2)/nu); marginals are exact
///                                 multivariate t with covariance Sigma
///   heterogeneous_sin           : X_t = sqrt(s_t) G_t, s_t = 1 + a sin(2 pi t / T)
///
/// Y_t = theta_star' X_t + eps_t in every case.
struct DgpSpec {
    DgpKind kind = DgpKind::gaussian_iid;
    int p = 1;
    Eigen::VectorXd theta_star;
    double noise_sd = 1.0;
    double ar_coeff = 0.0;
    double t_dof = kInf;
    Eigen::MatrixXd sigma_base;
    double hetero_amp = 0.0;

    bool stationary() const noexcept { return kind != DgpKind::heterogeneous_sin; }
    bool heavy_tailed() const noexcept { return kind == DgpKind::student_t_ar1; }

    /// Stationary predictor covariance (the base of Sigma_t for heterogeneous specs).
    Eigen::MatrixXd covariance() const;

    /// Scale s_t of Sigma_t = s_t Sigma at time t in 1..T.
    double scale_at(int t, int T) const;
};

/// Throws DomainError / AssumptionViolation when the DgpSpec is inconsistent.
void validate(const DgpSpec& spec);

/// Analytic constants of a DGP.
struct GroundTruth {
    double K_m = 1.0;
    double r_m = 8.0;
    double K_alpha = kInf;  ///< infinity encodes alpha(l) = 0 for all l >= 1
    double r_alpha = 1.0;
    double lambda_min = 1.0;
    double lambda_max = 1.0;
    double K_Sigma = 1.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double K_X = 1.0;

    double small_ball_theta = 0.5;
    /// E Z^4 / (E Z^2)^2 of any standardized linear functional of X_t.
    double kurtosis = 3.0;
    double noise_variance = 1.0;
    /// The alpha envelope is inherited from the latent Gaussian chain through a
    /// time-local measurable map rather than from the observed marginals.
    bool mixing_via_latent_chain = false;

    Eigen::MatrixXd sigma;  ///< stationary covariance (base covariance if heterogeneous)
};

struct Dgp {
    DgpSpec spec;
    GroundTruth truth;
};

/// Validates the DgpSpec and derives its ground-truth constants. `small_ball_theta`
/// is the Paley-Zygmund level; kappa1 = sqrt(theta), kappa2 = (1-theta)^2 / kurtosis.
Dgp make_dgp(const DgpSpec& spec, double small_ball_theta = 0.5);

/// Latent state at the last training period, used to condition out-of-sample risks.
struct LatentState {
    Eigen::VectorXd g;  ///< latent Gaussian VAR state
    double e = 0.0;     ///< latent noise AR state (unit variance)
};

struct Sample {
    int T = 0;
    int p = 0;
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    std::uint64_t seed = 0;
    LatentState terminal;
};

/// Deterministic in (dgp, T, seed). Stationary processes start from their
/// stationary law. Requires T > p.
Sample generate(const Dgp& dgp, int T, std::uint64_t seed);

/// n i.i.d. draws from the stationary marginal law of X_t (rows).
Eigen::MatrixXd draw_marginal(const Dgp& dgp, int n, Engine& engine);

/// Draws a latent state from its stationary law.
LatentState draw_latent_state(const Dgp& dgp, Engine& engine);

/// Simulates periods T+1..T+H of a stationary DGP given the latent state at T.
/// Returns (X, Y) with H rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_forward(const Dgp& dgp,
                                                             const LatentState& state, int H,
                                                             Engine& engine);

// Marginal-moment helpers.

/// ||Z||_{L_r} for Z ~ N(0, 1).
double gaussian_abs_moment_norm(double r);
/// ||Z||_{L_r} for Z a Student t with nu degrees of freedom scaled to unit variance.
double student_t_abs_moment_norm(double nu, double r);
/// Moment order used for K_m: min(nu - 0.5, 8), and 8 for Gaussian families.
double moment_order_for(double t_dof);

/// Dimension-free DGP description used by experiments whose predictor count
/// grows with T. `instantiate` produces the concrete spec for a given p.
struct CovarianceRule {
    enum class Kind { identity, toeplitz, equicorrelated, explicit_matrix };
    Kind kind = Kind::identity;
    double rho = 0.0;
    Eigen::MatrixXd matrix;
};

struct CoefficientRule {
    enum class Kind { ones, harmonic, explicit_vector };
    Kind kind = Kind::ones;
    Eigen::VectorXd values;
};

struct DgpFamily {
    DgpKind kind = DgpKind::gaussian_iid;
    double noise_sd = 1.0;
    double ar_coeff = 0.0;
    double t_dof = kInf;
    double hetero_amp = 0.0;
    CovarianceRule covariance;
    CoefficientRule coefficients;

    /// The fixed dimension imposed by explicit rules, if any.
    std::optional<int> fixed_dimension() const;
    DgpSpec instantiate(int p) const;
};

}  // namespace ermlab
