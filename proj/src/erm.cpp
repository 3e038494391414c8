#include "ermlab/erm.hpp"

#include <cmath>
#include <numbers>

#include "ermlab/errors.hpp"

namespace ermlab {

namespace {

void require_stationary(const Dgp& dgp) {
    if (!dgp.spec.stationary()) {
        throw AssumptionViolation("Assumption 7",
                                  "out-of-sample risk is defined for stationary DGPs only");
    }
}

void require_dimension(const Dgp& dgp, const PredictionRule& rule) {
    if (rule.theta.size() != dgp.spec.p) {
        throw DomainError("prediction rule has length " + std::to_string(rule.theta.size()) +
                          ", expected p = " + std::to_string(dgp.spec.p));
    }
}

// c^2 (E w)^2 for the scale mixture, i.e. the correlation between eps_t and its
// latent driver after the independent mixing weight is integrated out.
double mixing_cross_factor(const DgpSpec& spec) {
    if (!spec.heavy_tailed()) return 1.0;
    const double nu = spec.t_dof;
    const double log_mean_w = 0.5 * std::log(nu / 2.0) + std::lgamma(0.5 * (nu - 1.0)) -
                              std::lgamma(0.5 * nu);
    return (nu - 2.0) / nu * std::exp(2.0 * log_mean_w);
}

}  // namespace

PredictionRule fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                 std::uint64_t seed) {
    if (X.rows() != Y.size()) throw DomainError("rows(X) must equal length(Y)");
    if (X.cols() == 0 || X.rows() < X.cols()) {
        throw SingularDesign(seed, std::numeric_limits<double>::infinity());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
    const auto& sv = svd.singularValues();
    const double cond = sv(p - 1) > 0.0 ? sv(0) / sv(p - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxCondition)) throw SingularDesign(seed, cond);
    return PredictionRule{qr.solve(Y)};
}

PredictionRule fit_erm(const Sample& sample) {
    return fit_least_squares(sample.X, sample.Y, sample.seed);
}

double empirical_risk(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                      const Eigen::VectorXd& theta) {
    if (X.rows() != Y.size() || X.cols() != theta.size()) {
        throw DomainError("empirical_risk: dimension mismatch");
    }
    return (Y - X * theta).squaredNorm() / static_cast<double>(Y.size());
}

double empirical_risk(const Sample& sample, const PredictionRule& rule) {
    return empirical_risk(sample.X, sample.Y, rule.theta);
}

Eigen::VectorXd empirical_risk_gradient(const Sample& sample, const Eigen::VectorXd& theta) {
    if (sample.X.cols() != theta.size()) throw DomainError("gradient: dimension mismatch");
    return -(2.0 / sample.T) * sample.X.transpose() * (sample.Y - sample.X * theta);
}

Eigen::MatrixXd average_covariance(const Dgp& dgp, int T) {
    if (T < 1) throw DomainError("T must be positive");
    if (dgp.spec.stationary()) return dgp.truth.sigma;
    double mean_scale = 0.0;
    for (int t = 1; t <= T; ++t) mean_scale += dgp.spec.scale_at(t, T);
    mean_scale /= T;
    return mean_scale * dgp.truth.sigma;
}

Eigen::VectorXd solve_oracle(const Eigen::MatrixXd& sigma_bar, const Eigen::VectorXd& cross_moment) {
    if (sigma_bar.rows() != sigma_bar.cols() || sigma_bar.rows() != cross_moment.size()) {
        throw DomainError("solve_oracle: dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_bar);
    if (llt.info() != Eigen::Success) {
        throw AssumptionViolation("Assumption 4", "average predictor covariance is singular; the "
                                                  "oracle rule is not identified");
    }
    return llt.solve(cross_moment);
}

PredictionRule oracle_rule(const Dgp& dgp, int T) {
    const Eigen::MatrixXd sigma_bar = average_covariance(dgp, T);
    // (1/T) sum_t E(Y_t X_t) = (1/T) sum_t Sigma_t theta_star, since eps_t is
    // independent of X_t.
    const Eigen::VectorXd cross = sigma_bar * dgp.spec.theta_star;
    return PredictionRule{solve_oracle(sigma_bar, cross)};
}

RiskDecomposition population_risk(const Dgp& dgp, const PredictionRule& rule, int T) {
    require_dimension(dgp, rule);
    const Eigen::MatrixXd sigma_bar = average_covariance(dgp, T);
    const Eigen::VectorXd d = oracle_rule(dgp, T).theta - rule.theta;
    RiskDecomposition r;
    r.oracle_risk = dgp.truth.noise_variance;
    r.excess = d.dot(sigma_bar * d);
    r.risk_at_theta = r.oracle_risk + r.excess;
    return r;
}

double pythagorean_check(const Dgp& dgp, const PredictionRule& rule, int T) {
    require_dimension(dgp, rule);
    const Eigen::MatrixXd sigma_bar = average_covariance(dgp, T);
    const Eigen::VectorXd& truth = dgp.spec.theta_star;
    const Eigen::VectorXd oracle = oracle_rule(dgp, T).theta;

    const double second_y = truth.dot(sigma_bar * truth) + dgp.truth.noise_variance;
    const Eigen::VectorXd cross_yx = sigma_bar * truth;
    auto raw_risk = [&](const Eigen::VectorXd& th) {
        return second_y - 2.0 * th.dot(cross_yx) + th.dot(sigma_bar * th);
    };
    const Eigen::VectorXd d = oracle - rule.theta;
    const double lhs = raw_risk(oracle) + d.dot(sigma_bar * d);
    return std::abs(lhs - raw_risk(rule.theta));
}

double oos_risk(const Dgp& dgp, const PredictionRule& rule, int H) {
    require_stationary(dgp);
    if (H < 1) throw DomainError("horizon H must be >= 1");
    return population_risk(dgp, rule, H).risk_at_theta;
}

double conditional_oos_risk(const Dgp& dgp, const PredictionRule& rule, int H,
                            const LatentState& state) {
    require_stationary(dgp);
    require_dimension(dgp, rule);
    if (H < 1) throw DomainError("horizon H must be >= 1");
    const Eigen::VectorXd d = dgp.spec.theta_star - rule.theta;
    const double sigma = dgp.spec.noise_sd;
    const double dg = d.dot(state.g);
    const double unconditional = dgp.truth.noise_variance + d.dot(dgp.truth.sigma * d);
    const double conditional_part = sigma * sigma * state.e * state.e + dg * dg +
                                    2.0 * mixing_cross_factor(dgp.spec) * sigma * state.e * dg;
    const double phi2 = dgp.spec.ar_coeff * dgp.spec.ar_coeff;
    double total = 0.0;
    double a2 = 1.0;
    for (int h = 1; h <= H; ++h) {
        a2 *= phi2;
        total += a2 * conditional_part + (1.0 - a2) * unconditional;
    }
    return total / H;
}

MonteCarloEstimate oos_risk_mc(const Dgp& dgp, const PredictionRule& rule, int H,
                               const std::optional<LatentState>& state, int n_paths,
                               std::uint64_t seed) {
    require_stationary(dgp);
    require_dimension(dgp, rule);
    if (n_paths < 2) throw DomainError("need at least two paths");
    Engine engine = make_engine(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < n_paths; ++k) {
        const LatentState start = state ? *state : draw_latent_state(dgp, engine);
        auto [X, Y] = simulate_forward(dgp, start, H, engine);
        const double loss = empirical_risk(X, Y, rule.theta);
        sum += loss;
        sum_sq += loss * loss;
    }
    MonteCarloEstimate est;
    est.n = n_paths;
    est.mean = sum / n_paths;
    const double var = (sum_sq - n_paths * est.mean * est.mean) / (n_paths - 1);
    est.se = std::sqrt(std::max(var, 0.0) / n_paths);
    return est;
}

MonteCarloEstimate oos_dependence_gap(const Dgp& dgp, const PredictionRule& rule, int H,
                                      int n_states, std::uint64_t seed) {
    require_stationary(dgp);
    if (n_states < 2) throw DomainError("need at least two conditioning states");
    Engine engine = make_engine(seed);
    const double unconditional = oos_risk(dgp, rule, H);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < n_states; ++k) {
        const LatentState st = draw_latent_state(dgp, engine);
        const double gap = std::abs(conditional_oos_risk(dgp, rule, H, st) - unconditional);
        sum += gap;
        sum_sq += gap * gap;
    }
    MonteCarloEstimate est;
    est.n = n_states;
    est.mean = sum / n_states;
    const double var = (sum_sq - n_states * est.mean * est.mean) / (n_states - 1);
    est.se = std::sqrt(std::max(var, 0.0) / n_states);
    return est;
}

}  // namespace ermlab
