#include "ermlab/mc_verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "ermlab/erm.hpp"
#include "ermlab/errors.hpp"
#include "ermlab/rng.hpp"

namespace ermlab {

namespace {

constexpr double kMaxSkipFraction = 0.01;
constexpr std::int64_t kSmallBallChunk = 10'000;
constexpr std::uint64_t kSmallBallStream = 0x5ba11;

struct RepOutcome {
    bool skipped = false;
    std::uint64_t seed = 0;
    double excess = 0.0;
};

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own slot, so the result does not depend on scheduling.
template <class Body>
void parallel_for(int n, int threads, Body body) {
    threads = std::clamp(threads, 1, std::max(n, 1));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (int i = next++; i < n && !failed; i = next++) {
            try {
                body(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

Dgp reference_dgp(const ExperimentPlan& plan, int p) {
    return make_dgp(plan.family.instantiate(p), plan.small_ball_theta);
}

BoundInputs bound_inputs(const Dgp& dgp, const ExperimentPlan& plan, int T, int p) {
    const GroundTruth& g = dgp.truth;
    BoundInputs in;
    in.K_m = g.K_m;
    in.r_m = g.r_m;
    in.K_alpha = g.K_alpha;
    in.r_alpha = g.r_alpha;
    in.K_p = plan.K_p;
    in.r_p = plan.r_p;
    in.lambda_min = g.lambda_min;
    in.K_Sigma = g.K_Sigma;
    in.kappa1 = g.kappa1;
    in.kappa2 = g.kappa2;
    in.T = T;
    in.p = p;
    in.H = plan.H;
    return in;
}

double excess_risk(const Dgp& dgp, const ExperimentPlan& plan, const Sample& sample,
                   const PredictionRule& rule) {
    if (plan.theorem == Theorem::thm51) {
        const PredictionRule oracle{dgp.spec.theta_star};
        return conditional_oos_risk(dgp, rule, *plan.H, sample.terminal) -
               conditional_oos_risk(dgp, oracle, *plan.H, sample.terminal);
    }
    return population_risk(dgp, rule, sample.T).excess;
}

CellResult run_cell(const ExperimentPlan& plan, int T) {
    CellResult cell;
    cell.T = T;
    cell.p = predictor_count(plan.K_p, plan.r_p, T);
    const Dgp dgp = reference_dgp(plan, cell.p);
    cell.certificate = certificate(plan.theorem, bound_inputs(dgp, plan, T, cell.p));
    cell.bound = cell.certificate.bound;
    cell.failure_prob = cell.certificate.failure_prob;
    cell.vacuous = cell.certificate.vacuous;

    std::vector<RepOutcome> outcomes(plan.n_reps);
    parallel_for(plan.n_reps, plan.threads, [&](int rep) {
        RepOutcome& out = outcomes[rep];
        out.seed = derive_seed({plan.base_seed, static_cast<std::uint64_t>(T),
                                static_cast<std::uint64_t>(rep)});
        const Sample sample = generate(dgp, T, out.seed);
        try {
            const PredictionRule rule = fit_erm(sample);
            out.excess = excess_risk(dgp, plan, sample, rule);
        } catch (const SingularDesign&) {
            out.skipped = true;
        }
    });

    std::vector<double> excess;
    excess.reserve(outcomes.size());
    int violations = 0;
    for (int rep = 0; rep < plan.n_reps; ++rep) {
        const RepOutcome& out = outcomes[rep];
        if (out.skipped) {
            cell.skipped.push_back({rep, out.seed});
            continue;
        }
        excess.push_back(out.excess);
        if (out.excess > cell.bound) ++violations;
    }
    cell.n_used = static_cast<int>(excess.size());
    cell.failed = cell.skipped.size() > kMaxSkipFraction * plan.n_reps;
    if (cell.n_used == 0) {
        cell.failed = true;
        return cell;
    }
    double sum = 0.0;
    for (double e : excess) sum += e;
    cell.mean_excess = sum / cell.n_used;
    cell.median_excess = quantile(excess, 0.5);
    cell.q90_excess = quantile(excess, 0.9);
    cell.violation_freq = static_cast<double>(violations) / cell.n_used;
    return cell;
}

}  // namespace

void validate(const ExperimentPlan& plan) {
    if (plan.T_grid.empty()) throw ConfigError("T_grid must not be empty");
    for (std::size_t i = 1; i < plan.T_grid.size(); ++i) {
        if (plan.T_grid[i] <= plan.T_grid[i - 1]) throw ConfigError("T_grid must be strictly increasing");
    }
    if (plan.T_grid.front() < 2) throw ConfigError("T_grid entries must be >= 2");
    if (plan.n_reps < 2) throw ConfigError("n_reps must be >= 2");
    if (plan.threads < 1) throw ConfigError("threads must be >= 1");
    if (!(plan.K_p > 0.0)) throw AssumptionViolation("Assumption 3", "K_p must be positive");
    if (plan.theorem == Theorem::benchmark) {
        throw ConfigError("the benchmark bound is a comparison evaluator, not an experiment theorem");
    }
    if (plan.theorem == Theorem::thm51 && !(plan.H && *plan.H >= 1)) {
        throw ConfigError("thm51 requires a horizon H >= 1");
    }
    if (!(plan.small_ball_theta > 0.0 && plan.small_ball_theta < 1.0)) {
        throw ConfigError("small_ball_theta must lie in (0, 1)");
    }

    const auto fixed = plan.family.fixed_dimension();
    const Dgp probe = reference_dgp(plan, fixed.value_or(1));
    if (!probe.spec.stationary() && plan.theorem != Theorem::thm31) {
        throw AssumptionViolation("Assumption 4'", "heterogeneous specs require the thm31 certificate");
    }
    check_predictor_growth(plan.r_p, probe.truth.K_alpha, probe.truth.r_alpha, probe.truth.r_m);
    for (int T : plan.T_grid) {
        const int p = predictor_count(plan.K_p, plan.r_p, T);
        if (p < 1) throw AssumptionViolation("Assumption 3", "floor(K_p T^r_p) = 0 at T = " + std::to_string(T));
        if (p >= T) throw ConfigError("p(T) must be below T at T = " + std::to_string(T));
        if (fixed && *fixed != p) {
            throw ConfigError("explicit covariance/coefficients have dimension " + std::to_string(*fixed) +
                              " but the growth law gives p = " + std::to_string(p) + " at T = " +
                              std::to_string(T));
        }
    }
    if (plan.small_ball_draws != 0 &&
        (plan.small_ball_draws < 10'000 || plan.small_ball_directions < 100)) {
        throw ConfigError("small-ball estimate needs >= 1e4 draws and >= 100 directions");
    }
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
    validate(plan);
    ExperimentReport report;
    for (int T : plan.T_grid) report.cells.push_back(run_cell(plan, T));
    try {
        report.rate_slope = rate_regression(report);
    } catch (const DomainError&) {
        report.rate_slope.reset();
    }
    if (plan.small_ball_draws > 0) {
        const Dgp dgp = reference_dgp(plan, report.cells.back().p);
        report.small_ball = estimate_small_ball(dgp, dgp.truth.kappa1, plan.small_ball_draws,
                                                plan.small_ball_directions,
                                                derive_seed({plan.base_seed, kSmallBallStream}));
    }
    return report;
}

double rate_regression(const std::vector<CellResult>& cells) {
    std::vector<double> x;
    std::vector<double> y;
    for (const CellResult& c : cells) {
        if (c.n_used == 0 || !(c.median_excess > 0.0)) continue;
        const double T = c.T;
        x.push_back(std::log(c.p * std::log(T) / T));
        y.push_back(std::log(c.median_excess));
    }
    if (x.size() < 4) throw DomainError("rate regression needs at least 4 non-degenerate cells");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0)) throw DomainError("rate regression needs distinct regressor values");
    return sxy / sxx;
}

double rate_regression(const ExperimentReport& report) { return rate_regression(report.cells); }

SmallBallEstimate estimate_small_ball(const Dgp& dgp, double kappa1, std::int64_t n_draws,
                                      int n_directions, std::uint64_t seed) {
    if (n_draws < 10'000) throw DomainError("estimate_small_ball needs n_draws >= 1e4");
    if (n_directions < 100) throw DomainError("estimate_small_ball needs n_directions >= 100");
    if (!(kappa1 >= 0.0)) throw DomainError("kappa1 must be >= 0");
    const int p = dgp.spec.p;
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;

    Eigen::MatrixXd V(p, n_directions);
    for (int j = 0; j < n_directions; ++j) {
        for (int i = 0; i < p; ++i) V(i, j) = normal(engine);
        V.col(j).normalize();
    }
    const Eigen::VectorXd sd = (V.transpose() * dgp.truth.sigma * V).diagonal().cwiseSqrt();
    const Eigen::VectorXd threshold = kappa1 * sd;

    std::vector<std::int64_t> hits(n_directions, 0);
    for (std::int64_t done = 0; done < n_draws; done += kSmallBallChunk) {
        const int n = static_cast<int>(std::min(kSmallBallChunk, n_draws - done));
        const Eigen::MatrixXd proj = draw_marginal(dgp, n, engine) * V;
        for (int j = 0; j < n_directions; ++j) {
            for (int k = 0; k < n; ++k) {
                if (std::abs(proj(k, j)) >= threshold(j)) ++hits[j];
            }
        }
    }

    SmallBallEstimate est;
    est.kappa1 = kappa1;
    est.n_draws = n_draws;
    est.n_directions = n_directions;
    est.analytic_kappa2 = dgp.truth.kappa2;
    est.frequencies.reserve(n_directions);
    for (auto h : hits) est.frequencies.push_back(static_cast<double>(h) / n_draws);
    est.min_freq = *std::min_element(est.frequencies.begin(), est.frequencies.end());
    est.max_freq = *std::max_element(est.frequencies.begin(), est.frequencies.end());
    for (double f : est.frequencies) {
        est.se = std::max(est.se, std::sqrt(f * (1.0 - f) / static_cast<double>(n_draws)));
    }
    return est;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

}  // namespace ermlab
