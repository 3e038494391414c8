#include "ermlab/concentration.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "ermlab/bounds.hpp"
#include "ermlab/dgp.hpp"
#include "ermlab/errors.hpp"
#include "ermlab/rng.hpp"

namespace ermlab {

namespace {

double frequency_se(double freq, std::int64_t n) {
    return std::sqrt(std::max(freq * (1.0 - freq), 0.0) / static_cast<double>(n));
}

// Running mean and standard error of a scalar statistic.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double se() const {
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

void require_draws(std::int64_t n) {
    if (n < 2) throw DomainError("Monte Carlo checks need at least two draws");
}

double capped_alpha(double phi, int lag) {
    return std::min(std::pow(std::abs(phi), lag), 0.25);
}

}  // namespace

InequalityCheck make_check(std::string name, bool lower_bound, double bound, double empirical,
                           double se, std::int64_t n_samples, bool probability_bound) {
    InequalityCheck c;
    c.name = std::move(name);
    c.lower_bound = lower_bound;
    c.bound_value = bound;
    c.empirical_value = empirical;
    c.se = se;
    c.n_samples = n_samples;
    c.margin = lower_bound ? empirical - bound : bound - empirical;
    c.passed = c.margin >= -3.0 * se;
    c.vacuous = probability_bound && !lower_bound && bound >= 1.0;
    return c;
}

double liebscher_bernstein(double T, double eps, double M, double D, double alpha_at_M,
                           double sup_norm) {
    if (!(T >= 1.0) || !(eps > 0.0) || !(D >= 0.0) || !(sup_norm > 0.0)) {
        throw DomainError("liebscher_bernstein: need T >= 1, eps > 0, D >= 0, sup_norm > 0");
    }
    if (!(alpha_at_M >= 0.0)) throw DomainError("liebscher_bernstein: alpha must be >= 0");
    if (!(M >= 1.0 && M <= T)) {
        throw BlockingCondition("block length M must satisfy 1 <= M <= T");
    }
    if (!(4.0 * sup_norm * M < T * eps)) {
        throw BlockingCondition("usability condition 4 sup_norm M < T eps fails (" +
                                std::to_string(4.0 * sup_norm * M) + " >= " +
                                std::to_string(T * eps) + ")");
    }
    const double num = T * T * eps * eps;
    const double den = 64.0 * (T / M) * D + (8.0 / 3.0) * sup_norm * M * T * eps;
    return 4.0 * std::exp(-num / den) + 4.0 * (T / M) * alpha_at_M;
}

double davydov_cov_bound(double alpha, double r, double norm_a, double norm_b) {
    if (!(r > 2.0)) throw DomainError("davydov_cov_bound: r must exceed 2");
    if (!(alpha >= 0.0 && alpha <= 0.25)) throw DomainError("davydov_cov_bound: alpha in [0, 1/4]");
    if (!(norm_a >= 0.0 && norm_b >= 0.0)) throw DomainError("davydov_cov_bound: norms >= 0");
    return 4.0 * (r / (r - 2.0)) * std::pow(alpha, 1.0 - 2.0 / r) * norm_a * norm_b;
}

double billingsley_cov_bound(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 0.25)) throw DomainError("billingsley_cov_bound: alpha in [0, 1/4]");
    return 4.0 * alpha;
}

double ibragimov_bound(double alpha_h, double l2_norm) {
    if (!(alpha_h >= 0.0 && alpha_h <= 0.25)) throw DomainError("ibragimov_bound: alpha in [0, 1/4]");
    if (!(l2_norm >= 0.0)) throw DomainError("ibragimov_bound: norm must be >= 0");
    return 6.0 * std::sqrt(alpha_h) * l2_norm;
}

double paley_zygmund_bound(double second_moment, double fourth_moment, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("paley_zygmund_bound: theta in [0, 1]");
    if (!(second_moment > 0.0)) throw DomainError("paley_zygmund_bound: second moment must be > 0");
    if (!(fourth_moment >= second_moment * second_moment)) {
        throw DomainError("paley_zygmund_bound: fourth moment below squared second moment "
                          "(Cauchy-Schwarz inconsistency)");
    }
    const double s = 1.0 - theta;
    return s * s * second_moment * second_moment / fourth_moment;
}

double cone_probability_bound(int p, double b) {
    if (p < 2) throw DomainError("cone_probability_bound requires p >= 2");
    if (!(b > 0.0)) throw DomainError("cone_probability_bound requires b > 0");
    return 0.5 * std::sqrt(std::numbers::pi / 2.0) * std::sqrt(static_cast<double>(p)) * b;
}

double covering_number_bound(int p, double lambda_min, double delta) {
    if (p < 1) throw DomainError("covering_number_bound requires p >= 1");
    if (!(lambda_min > 0.0) || !(delta > 0.0)) {
        throw DomainError("covering_number_bound requires lambda_min > 0 and delta > 0");
    }
    return std::pow(1.0 + 2.0 / (std::sqrt(lambda_min) * delta), p);
}

int greedy_net_size(const Eigen::MatrixXd& points, double delta) {
    std::vector<Eigen::Index> net;
    const double d2 = delta * delta;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        bool covered = false;
        for (auto j : net) {
            if ((points.row(i) - points.row(j)).squaredNorm() <= d2) {
                covered = true;
                break;
            }
        }
        if (!covered) net.push_back(i);
    }
    return static_cast<int>(net.size());
}

HeavyTailBound heavy_tail_vector_tail(const HeavyTailInputs& in) {
    if (!(in.r_m > 2.0)) throw AssumptionViolation("Assumption 1", "r_m must exceed 2");
    if (!(in.r_p >= 0.0 && in.r_p < (in.r_m - 2.0) / 2.0)) {
        throw AssumptionViolation("Assumption 3", "r_p must lie in [0, (r_m - 2)/2)");
    }
    if (in.T < 2) throw DomainError("T must be >= 2");
    HeavyTailBound b;
    b.p = predictor_count(in.K_p, in.r_p, in.T);
    if (b.p < 1) throw DomainError("floor(K_p T^r_p) must be >= 1");
    b.sigma = std::sqrt(k_sigma2(in.K_m, in.r_m, in.K_alpha, in.r_alpha));
    const double logT = std::log(static_cast<double>(in.T));
    b.threshold = 12.0 * b.sigma * std::sqrt(b.p * logT / in.T);
    b.probability = 3.0 * in.K_p * std::pow(2.0 * in.K_m, in.r_m) / (b.sigma * logT);
    b.vacuous = b.probability >= 1.0;
    return b;
}

TruncationSchedule truncation_schedule(int T, double r_p, double r_m) {
    if (T < 2) throw DomainError("T must be >= 2");
    if (!(r_m > 2.0)) throw DomainError("r_m must exceed 2");
    const double t = static_cast<double>(T);
    const double logT = std::log(t);
    TruncationSchedule s;
    s.b_T = std::pow(std::pow(t, (1.0 + 2.0 * r_p) / 2.0) * std::sqrt(logT), 1.0 / (r_m - 1.0));
    s.M_T = static_cast<long>(std::floor(std::sqrt(t) / (s.b_T * std::sqrt(logT))));
    return s;
}

BernoulliThreshold bernoulli_threshold(int T, int p, double K_alpha, double r_alpha) {
    if (T < 2 || p < 1) throw DomainError("bernoulli_threshold requires T >= 2 and p >= 1");
    constexpr double K1 = 1.5;
    BernoulliThreshold out;
    out.sigma2 = 0.25 + 8.0 * mixing_series(K_alpha, r_alpha, 1.0);
    const double K2 = 64.0 * out.sigma2;
    const double t = static_cast<double>(T);
    const double scale = std::pow(t, r_alpha / (r_alpha + 1.0));
    const double logT = std::log(t);
    out.eps_T = std::sqrt(K1 * K2 * p * logT / scale) + std::sqrt(K2 * logT / scale);
    out.M_T = static_cast<long>(std::floor(std::pow(t, 1.0 / (r_alpha + 1.0))));
    return out;
}

InequalityCheck falsify_paley_zygmund(double t_dof, double theta, std::int64_t draws,
                                      std::uint64_t seed) {
    require_draws(draws);
    const bool heavy = std::isfinite(t_dof);
    if (heavy && !(t_dof > 4.0)) throw DomainError("Paley-Zygmund check needs t_dof > 4");
    const double kurtosis = heavy ? 3.0 * (t_dof - 2.0) / (t_dof - 4.0) : 3.0;
    const double bound = paley_zygmund_bound(1.0, kurtosis, theta);

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(heavy ? t_dof : 1.0);
    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < draws; ++k) {
        double w = normal(engine);
        if (heavy) w *= std::sqrt((t_dof - 2.0) / chi2(engine));
        if (w * w > theta) ++hits;
    }
    const double freq = static_cast<double>(hits) / draws;
    const std::string name = heavy ? "paley_zygmund_t" : "paley_zygmund";
    return make_check(name, true, bound, freq, frequency_se(freq, draws), draws, true);
}

InequalityCheck falsify_cone_probability(int p, double b, std::int64_t draws, std::uint64_t seed) {
    require_draws(draws);
    const double bound = cone_probability_bound(p, b);
    constexpr std::array<double, 6> offsets{0.0, 0.1, 0.25, 0.5, 1.0, 2.0};
    std::array<std::int64_t, offsets.size()> hits{};

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double z1 = normal(engine);
        double rest = 0.0;
        for (int i = 1; i < p; ++i) {
            const double z = normal(engine);
            rest += z * z;
        }
        const double width = b * std::sqrt(rest);
        for (std::size_t j = 0; j < offsets.size(); ++j) {
            if (z1 >= offsets[j] && z1 <= offsets[j] + width) ++hits[j];
        }
    }
    const std::int64_t worst = *std::max_element(hits.begin(), hits.end());
    const double freq = static_cast<double>(worst) / draws;
    return make_check("cone_probability", false, bound, freq, frequency_se(freq, draws), draws, true);
}

InequalityCheck falsify_davydov(double phi, int lag, double r, std::int64_t draws,
                                std::uint64_t seed) {
    require_draws(draws);
    if (lag < 1) throw DomainError("lag must be >= 1");
    const double rho = std::pow(phi, lag);
    const double norm = gaussian_abs_moment_norm(r);
    const double bound = davydov_cov_bound(capped_alpha(phi, lag), r, norm, norm);

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    const double innov = std::sqrt(1.0 - rho * rho);
    Moments m;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double a = normal(engine);
        const double b = rho * a + innov * normal(engine);
        m.add(a * b);
    }
    return make_check("davydov", false, bound, std::abs(m.mean()), m.se(), draws, false);
}

InequalityCheck falsify_billingsley(double phi, int lag, std::int64_t draws, std::uint64_t seed) {
    require_draws(draws);
    if (lag < 1) throw DomainError("lag must be >= 1");
    const double rho = std::pow(phi, lag);
    const double bound = billingsley_cov_bound(capped_alpha(phi, lag));

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    const double innov = std::sqrt(1.0 - rho * rho);
    Moments m;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double a = normal(engine);
        const double b = rho * a + innov * normal(engine);
        const double ia = (a > 0.0 ? 1.0 : 0.0) - 0.5;
        const double ib = (b > 0.0 ? 1.0 : 0.0) - 0.5;
        m.add(ia * ib);
    }
    return make_check("billingsley", false, bound, std::abs(m.mean()), m.se(), draws, false);
}

InequalityCheck falsify_ibragimov(double phi, int h, std::int64_t draws, std::uint64_t seed) {
    require_draws(draws);
    if (h < 1) throw DomainError("h must be >= 1");
    // f(z) = z^2 has ||f - E f||_2 = sqrt(2) under N(0, 1).
    const double bound = ibragimov_bound(capped_alpha(phi, h), std::sqrt(2.0));
    const double decay = std::pow(phi, 2 * h);

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    Moments m;
    for (std::int64_t k = 0; k < draws; ++k) {
        const double z = normal(engine);
        m.add(std::abs(decay * (z * z - 1.0)));
    }
    return make_check("ibragimov", false, bound, m.mean(), m.se(), draws, false);
}

InequalityCheck falsify_liebscher_rademacher(int T, double eps, std::int64_t trials,
                                             std::uint64_t seed) {
    require_draws(trials);
    const double bound = liebscher_bernstein(T, eps, 1.0, 1.0, 0.0, 1.0);
    Engine engine = make_engine(seed);
    const double level = T * eps;
    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < trials; ++k) {
        long ones = 0;
        int remaining = T;
        while (remaining > 0) {
            std::uint64_t word = engine();
            if (remaining < 64) word &= (std::uint64_t{1} << remaining) - 1;
            ones += std::popcount(word);
            remaining -= 64;
        }
        const double sum = 2.0 * ones - T;
        if (std::abs(sum) > level) ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    return make_check("liebscher", false, bound, freq, frequency_se(freq, trials), trials, true);
}

InequalityCheck falsify_liebscher_mixing(int T, double eps, double phi, int M, std::int64_t trials,
                                         std::uint64_t seed) {
    require_draws(trials);
    if (!(std::abs(phi) < 1.0)) throw DomainError("|phi| must be < 1");
    double dependence = 0.0;
    for (int l = 1; l < M; ++l) dependence += capped_alpha(phi, l);
    const double D = M * (0.25 + 8.0 * dependence);
    const double bound = liebscher_bernstein(T, eps, M, D, capped_alpha(phi, M), 0.5);

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    const double innov = std::sqrt(1.0 - phi * phi);
    const double level = T * eps;
    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < trials; ++k) {
        double g = normal(engine);
        double sum = 0.0;
        for (int t = 0; t < T; ++t) {
            if (t > 0) g = phi * g + innov * normal(engine);
            sum += (g > 0.0 ? 0.5 : -0.5);
        }
        if (std::abs(sum) > level) ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    return make_check("liebscher_mixing", false, bound, freq, frequency_se(freq, trials), trials,
                      true);
}

InequalityCheck falsify_covering_number(int p, double lambda_min, double delta, std::int64_t points,
                                        std::uint64_t seed) {
    require_draws(points);
    const double bound = covering_number_bound(p, lambda_min, delta);
    const double radius = 1.0 / std::sqrt(lambda_min);
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd pts(points, p);
    for (Eigen::Index k = 0; k < pts.rows(); ++k) {
        for (int i = 0; i < p; ++i) pts(k, i) = normal(engine);
        pts.row(k) *= radius / pts.row(k).norm();
    }
    const int size = greedy_net_size(pts, delta);
    return make_check("covering_number", false, bound, size, 0.0, points, false);
}

InequalityCheck falsify_heavy_tail_vector(double phi, int T, int p, std::int64_t reps,
                                          std::uint64_t seed) {
    require_draws(reps);
    DgpSpec spec;
    spec.kind = phi == 0.0 ? DgpKind::gaussian_iid : DgpKind::gaussian_ar1;
    spec.p = p;
    spec.ar_coeff = phi;
    spec.noise_sd = 1.0;
    spec.sigma_base = Eigen::MatrixXd::Identity(p, p);
    spec.theta_star = Eigen::VectorXd::Ones(p);
    const Dgp dgp = make_dgp(spec);

    HeavyTailInputs in;
    in.K_m = dgp.truth.K_m;
    in.r_m = dgp.truth.r_m;
    in.K_alpha = dgp.truth.K_alpha;
    in.r_alpha = dgp.truth.r_alpha;
    in.K_p = p;
    in.r_p = 0.0;
    in.T = T;
    const HeavyTailBound hb = heavy_tail_vector_tail(in);

    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < reps; ++k) {
        const Sample s = generate(dgp, T, derive_seed({seed, static_cast<std::uint64_t>(k)}));
        const Eigen::VectorXd resid = s.Y - s.X * spec.theta_star;
        const Eigen::VectorXd mean = s.X.transpose() * resid / static_cast<double>(T);
        if (mean.norm() > hb.threshold) ++hits;
    }
    const double freq = static_cast<double>(hits) / reps;
    return make_check("heavy_tail_vector", false, hb.probability, freq, frequency_se(freq, reps),
                      reps, true);
}

}  // namespace ermlab
