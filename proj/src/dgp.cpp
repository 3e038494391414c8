#include "ermlab/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ermlab/errors.hpp"

namespace ermlab {

namespace {

constexpr double kSymmetryTol = 1e-10;

struct KindName {
    DgpKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {DgpKind::gaussian_iid, "gaussian_iid"},
    {DgpKind::gaussian_ar1, "gaussian_ar1"},
    {DgpKind::student_t_ar1, "student_t_ar1"},
    {DgpKind::factor_model, "factor_model"},
    {DgpKind::heterogeneous_sin, "heterogeneous_sin"},
};

// Draws shared by every family: a standardized latent chain and the scale
// mixing variables of the t family.
struct LatentDraws {
    Eigen::MatrixXd u;  // T x p, rows are N(0, I) states of the unit VAR chain
    Eigen::VectorXd e;  // T, unit-variance AR(1) noise chain
    Eigen::VectorXd wx;
    Eigen::VectorXd we;
};

double t_scale(double nu) { return std::sqrt((nu - 2.0) / nu); }

double mixing_weight(std::chi_squared_distribution<double>& chi2, double nu, Engine& engine) {
    return 1.0 / std::sqrt(chi2(engine) / nu);
}

Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw AssumptionViolation("Assumption 4", "predictor covariance is not positive definite");
    }
    return llt.matrixL();
}

}  // namespace

std::string_view to_string(DgpKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

DgpKind dgp_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw DomainError("unknown DGP kind '" + std::string(name) + "'");
}

Eigen::MatrixXd DgpSpec::covariance() const {
    if (kind == DgpKind::factor_model) {
        return sigma_base + Eigen::MatrixXd::Ones(p, p);
    }
    return sigma_base;
}

double DgpSpec::scale_at(int t, int T) const {
    if (kind != DgpKind::heterogeneous_sin) return 1.0;
    return 1.0 + hetero_amp * std::sin(2.0 * std::numbers::pi * t / T);
}

void validate(const DgpSpec& spec) {
    if (spec.p < 1) throw DomainError("p must be positive");
    if (spec.theta_star.size() != spec.p) {
        throw DomainError("theta_star has length " + std::to_string(spec.theta_star.size()) +
                          ", expected p = " + std::to_string(spec.p));
    }
    if (!spec.theta_star.allFinite()) throw DomainError("theta_star has non-finite entries");
    if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) {
        throw DomainError("noise_sd must be a finite nonnegative number");
    }
    if (spec.sigma_base.rows() != spec.p || spec.sigma_base.cols() != spec.p) {
        throw DomainError("sigma_base must be p x p");
    }
    if (!spec.sigma_base.allFinite()) throw DomainError("sigma_base has non-finite entries");
    const double asym = (spec.sigma_base - spec.sigma_base.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol) {
        throw DomainError("sigma_base is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.sigma_base, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues()(0) > 0.0)) {
        throw AssumptionViolation("Assumption 4", "sigma_base has smallest eigenvalue " +
                                                      std::to_string(eig.eigenvalues()(0)) +
                                                      " (must be > 0)");
    }
    if (!(std::abs(spec.ar_coeff) < 1.0)) {
        throw AssumptionViolation("Assumption 2", "|ar_coeff| must be < 1 for geometric mixing");
    }
    if (spec.kind == DgpKind::gaussian_iid && spec.ar_coeff != 0.0) {
        throw DomainError("gaussian_iid requires ar_coeff = 0");
    }
    if (spec.kind == DgpKind::student_t_ar1) {
        if (!std::isfinite(spec.t_dof) || !(spec.t_dof > 4.0)) {
            throw AssumptionViolation("Assumption 1'",
                                      "student_t_ar1 needs finite t_dof > 4 (four moments)");
        }
    } else if (std::isfinite(spec.t_dof)) {
        throw DomainError(std::string(to_string(spec.kind)) + " requires t_dof = infinity");
    }
    if (spec.kind == DgpKind::heterogeneous_sin) {
        if (!(spec.hetero_amp >= 0.0 && spec.hetero_amp < 1.0)) {
            throw AssumptionViolation("Assumption 4", "hetero_amp must lie in [0, 1)");
        }
    } else if (spec.hetero_amp != 0.0) {
        throw DomainError("hetero_amp is only meaningful for heterogeneous_sin");
    }
}

double gaussian_abs_moment_norm(double r) {
    const double log_moment = 0.5 * r * std::log(2.0) + std::lgamma(0.5 * (r + 1.0)) -
                              0.5 * std::log(std::numbers::pi);
    return std::exp(log_moment / r);
}

double student_t_abs_moment_norm(double nu, double r) {
    if (!(r < nu)) throw DomainError("t moment of order r requires r < nu");
    // E|t_nu|^r = nu^{r/2} G((r+1)/2) G((nu-r)/2) / (sqrt(pi) G(nu/2)), then
    // rescaled by ((nu-2)/nu)^{r/2} to unit variance.
    const double log_moment = 0.5 * r * std::log(nu - 2.0) + std::lgamma(0.5 * (r + 1.0)) +
                              std::lgamma(0.5 * (nu - r)) - 0.5 * std::log(std::numbers::pi) -
                              std::lgamma(0.5 * nu);
    return std::exp(log_moment / r);
}

double moment_order_for(double t_dof) {
    if (!std::isfinite(t_dof)) return 8.0;
    return std::min(t_dof - 0.5, 8.0);
}

Dgp make_dgp(const DgpSpec& spec, double small_ball_theta) {
    validate(spec);
    if (!(small_ball_theta > 0.0 && small_ball_theta < 1.0)) {
        throw DomainError("small-ball level must lie in (0, 1)");
    }
    GroundTruth g;
    g.sigma = spec.covariance();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.sigma, Eigen::EigenvaluesOnly);
    const double amp = spec.kind == DgpKind::heterogeneous_sin ? spec.hetero_amp : 0.0;
    g.lambda_min = eig.eigenvalues()(0) * (1.0 - amp);
    g.lambda_max = eig.eigenvalues()(spec.p - 1) * (1.0 + amp);
    g.K_Sigma = g.lambda_max / g.lambda_min;

    if (spec.ar_coeff == 0.0) {
        g.K_alpha = kInf;
    } else {
        g.K_alpha = -std::log(std::abs(spec.ar_coeff));
    }
    g.r_alpha = 1.0;
    g.mixing_via_latent_chain = spec.heavy_tailed();

    g.r_m = moment_order_for(spec.t_dof);
    const double unit_norm = spec.heavy_tailed() ? student_t_abs_moment_norm(spec.t_dof, g.r_m)
                                                 : gaussian_abs_moment_norm(g.r_m);
    const double max_sd = std::sqrt(g.sigma.diagonal().maxCoeff() * (1.0 + amp));
    const double x_norm = max_sd * unit_norm;
    // eps_t is independent of X_t, so ||eps X_i||_r = ||eps||_r ||X_i||_r.
    const double product_norm = spec.noise_sd * unit_norm * x_norm;
    g.K_m = std::max({1.0, x_norm, product_norm});

    g.kurtosis = spec.heavy_tailed() ? 3.0 * (spec.t_dof - 2.0) / (spec.t_dof - 4.0) : 3.0;
    g.small_ball_theta = small_ball_theta;
    g.kappa1 = std::sqrt(small_ball_theta);
    g.kappa2 = (1.0 - small_ball_theta) * (1.0 - small_ball_theta) / g.kurtosis;
    g.K_X = 1.0;
    g.noise_variance = spec.noise_sd * spec.noise_sd;
    return Dgp{spec, std::move(g)};
}

namespace {

LatentDraws draw_latent(const DgpSpec& spec, int T, Engine& engine) {
    LatentDraws d;
    d.u.resize(T, spec.p);
    d.e.resize(T);
    const bool heavy = spec.heavy_tailed();
    if (heavy) {
        d.wx.resize(T);
        d.we.resize(T);
    }
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(heavy ? spec.t_dof : 1.0);
    const double phi = spec.ar_coeff;
    const double innov = std::sqrt(1.0 - phi * phi);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < spec.p; ++i) d.u(t, i) = normal(engine);
        d.e(t) = normal(engine);
        if (heavy) {
            d.wx(t) = mixing_weight(chi2, spec.t_dof, engine);
            d.we(t) = mixing_weight(chi2, spec.t_dof, engine);
        }
        if (t > 0) {
            d.u.row(t) = phi * d.u.row(t - 1) + innov * d.u.row(t);
            d.e(t) = phi * d.e(t - 1) + innov * d.e(t);
        }
    }
    return d;
}

}  // namespace

Sample generate(const Dgp& dgp, int T, std::uint64_t seed) {
    const DgpSpec& spec = dgp.spec;
    if (T <= spec.p) {
        throw DomainError("generate requires T > p (T = " + std::to_string(T) +
                          ", p = " + std::to_string(spec.p) + ")");
    }
    Engine engine = make_engine(seed);
    LatentDraws d = draw_latent(spec, T, engine);
    const Eigen::MatrixXd L = lower_cholesky(dgp.truth.sigma);

    Sample s;
    s.T = T;
    s.p = spec.p;
    s.seed = seed;
    Eigen::MatrixXd G = d.u * L.transpose();
    s.terminal.g = G.row(T - 1).transpose();
    s.terminal.e = d.e(T - 1);

    s.X = std::move(G);
    Eigen::VectorXd eps = spec.noise_sd * d.e;
    if (spec.heavy_tailed()) {
        const double c = t_scale(spec.t_dof);
        s.X.array().colwise() *= c * d.wx.array();
        eps.array() *= c * d.we.array();
    } else if (spec.kind == DgpKind::heterogeneous_sin) {
        for (int t = 0; t < T; ++t) s.X.row(t) *= std::sqrt(spec.scale_at(t + 1, T));
    }
    s.Y = s.X * spec.theta_star + eps;
    return s;
}

Eigen::MatrixXd draw_marginal(const Dgp& dgp, int n, Engine& engine) {
    const DgpSpec& spec = dgp.spec;
    const Eigen::MatrixXd L = lower_cholesky(dgp.truth.sigma);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(spec.heavy_tailed() ? spec.t_dof : 1.0);
    Eigen::MatrixXd z(n, spec.p);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < spec.p; ++i) z(k, i) = normal(engine);
        if (spec.heavy_tailed()) {
            z.row(k) *= t_scale(spec.t_dof) * mixing_weight(chi2, spec.t_dof, engine);
        }
    }
    return z * L.transpose();
}

LatentState draw_latent_state(const Dgp& dgp, Engine& engine) {
    const Eigen::MatrixXd L = lower_cholesky(dgp.truth.sigma);
    std::normal_distribution<double> normal;
    Eigen::VectorXd u(dgp.spec.p);
    for (int i = 0; i < dgp.spec.p; ++i) u(i) = normal(engine);
    LatentState st;
    st.g = L * u;
    st.e = normal(engine);
    return st;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_forward(const Dgp& dgp,
                                                             const LatentState& state, int H,
                                                             Engine& engine) {
    const DgpSpec& spec = dgp.spec;
    if (!spec.stationary()) throw DomainError("forward simulation requires a stationary DGP");
    if (H < 1) throw DomainError("horizon H must be >= 1");
    const Eigen::MatrixXd L = lower_cholesky(dgp.truth.sigma);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(spec.heavy_tailed() ? spec.t_dof : 1.0);
    const double phi = spec.ar_coeff;
    const double innov = std::sqrt(1.0 - phi * phi);

    Eigen::MatrixXd X(H, spec.p);
    Eigen::VectorXd Y(H);
    Eigen::VectorXd g = state.g;
    double e = state.e;
    Eigen::VectorXd u(spec.p);
    for (int h = 0; h < H; ++h) {
        for (int i = 0; i < spec.p; ++i) u(i) = normal(engine);
        g = phi * g + innov * (L * u);
        e = phi * e + innov * normal(engine);
        Eigen::VectorXd x = g;
        double eps = spec.noise_sd * e;
        if (spec.heavy_tailed()) {
            const double c = t_scale(spec.t_dof);
            x *= c * mixing_weight(chi2, spec.t_dof, engine);
            eps *= c * mixing_weight(chi2, spec.t_dof, engine);
        }
        X.row(h) = x.transpose();
        Y(h) = x.dot(spec.theta_star) + eps;
    }
    return {std::move(X), std::move(Y)};
}

std::optional<int> DgpFamily::fixed_dimension() const {
    if (covariance.kind == CovarianceRule::Kind::explicit_matrix) {
        return static_cast<int>(covariance.matrix.rows());
    }
    if (coefficients.kind == CoefficientRule::Kind::explicit_vector) {
        return static_cast<int>(coefficients.values.size());
    }
    return std::nullopt;
}

DgpSpec DgpFamily::instantiate(int p) const {
    if (p < 1) throw DomainError("p must be positive");
    if (auto fixed = fixed_dimension(); fixed && *fixed != p) {
        throw DomainError("explicit covariance/coefficients have dimension " +
                          std::to_string(*fixed) + " but p = " + std::to_string(p));
    }
    DgpSpec s;
    s.kind = kind;
    s.p = p;
    s.noise_sd = noise_sd;
    s.ar_coeff = ar_coeff;
    s.t_dof = t_dof;
    s.hetero_amp = hetero_amp;

    switch (covariance.kind) {
        case CovarianceRule::Kind::identity:
            s.sigma_base = Eigen::MatrixXd::Identity(p, p);
            break;
        case CovarianceRule::Kind::toeplitz:
            s.sigma_base.resize(p, p);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) s.sigma_base(i, j) = std::pow(covariance.rho, std::abs(i - j));
            break;
        case CovarianceRule::Kind::equicorrelated:
            s.sigma_base = (1.0 - covariance.rho) * Eigen::MatrixXd::Identity(p, p) +
                           covariance.rho * Eigen::MatrixXd::Ones(p, p);
            break;
        case CovarianceRule::Kind::explicit_matrix:
            s.sigma_base = covariance.matrix;
            break;
    }
    switch (coefficients.kind) {
        case CoefficientRule::Kind::ones:
            s.theta_star = Eigen::VectorXd::Ones(p);
            break;
        case CoefficientRule::Kind::harmonic:
            s.theta_star.resize(p);
            for (int i = 0; i < p; ++i) s.theta_star(i) = 1.0 / (i + 1);
            break;
        case CoefficientRule::Kind::explicit_vector:
            s.theta_star = coefficients.values;
            break;
    }
    return s;
}

}  // namespace ermlab
