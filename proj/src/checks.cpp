#include "ermlab/checks.hpp"

#include <cmath>
#include <functional>

#include "ermlab/dgp.hpp"
#include "ermlab/errors.hpp"
#include "ermlab/mc_verify.hpp"

namespace ermlab {

namespace {

using Params = std::map<std::string, double>;

struct CheckEntry {
    std::string name;
    std::int64_t default_draws;
    Params defaults;
    std::function<InequalityCheck(const Params&, std::int64_t, std::uint64_t)> run;
};

int as_int(const Params& p, const char* key) {
    const double v = p.at(key);
    if (v != std::floor(v)) throw ConfigError(std::string("parameter '") + key + "' must be an integer");
    return static_cast<int>(v);
}

InequalityCheck small_ball_check(const Params& a, std::int64_t draws, std::uint64_t seed) {
    const int p = as_int(a, "p");
    const double kappa1 = a.at("kappa1");
    DgpSpec spec;
    spec.p = p;
    spec.t_dof = a.at("t_dof");
    spec.kind = std::isfinite(spec.t_dof) ? DgpKind::student_t_ar1 : DgpKind::gaussian_iid;
    spec.sigma_base = Eigen::MatrixXd::Identity(p, p);
    spec.theta_star = Eigen::VectorXd::Ones(p);
    const Dgp dgp = make_dgp(spec);
    const SmallBallEstimate est =
        estimate_small_ball(dgp, kappa1, draws, as_int(a, "directions"), seed);
    // Paley-Zygmund lower bound at level kappa1^2.
    const double theta = kappa1 * kappa1;
    const double bound = theta <= 1.0 ? paley_zygmund_bound(1.0, dgp.truth.kurtosis, theta) : 0.0;
    return make_check("small_ball", true, bound, est.min_freq, est.se, draws, true);
}

const std::vector<CheckEntry>& registry() {
    static const std::vector<CheckEntry> entries = {
        {"paley_zygmund", 1'000'000, {{"t_dof", kInf}, {"theta", 0.5}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_paley_zygmund(a.at("t_dof"), a.at("theta"), n, s);
         }},
        {"paley_zygmund_t", 1'000'000, {{"t_dof", 5.0}, {"theta", 0.5}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_paley_zygmund(a.at("t_dof"), a.at("theta"), n, s);
         }},
        {"cone_probability", 1'000'000, {{"p", 50.0}, {"b", 0.01}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_cone_probability(as_int(a, "p"), a.at("b"), n, s);
         }},
        {"davydov", 1'000'000, {{"phi", 0.5}, {"lag", 1.0}, {"r", 4.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_davydov(a.at("phi"), as_int(a, "lag"), a.at("r"), n, s);
         }},
        {"billingsley", 1'000'000, {{"phi", 0.5}, {"lag", 2.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_billingsley(a.at("phi"), as_int(a, "lag"), n, s);
         }},
        {"ibragimov", 1'000'000, {{"phi", 0.5}, {"h", 3.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_ibragimov(a.at("phi"), as_int(a, "h"), n, s);
         }},
        {"liebscher", 10'000, {{"T", 10'000.0}, {"eps", 0.05}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_liebscher_rademacher(as_int(a, "T"), a.at("eps"), n, s);
         }},
        {"liebscher_mixing", 10'000, {{"T", 10'000.0}, {"eps", 0.05}, {"phi", 0.5}, {"M", 10.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_liebscher_mixing(as_int(a, "T"), a.at("eps"), a.at("phi"),
                                             as_int(a, "M"), n, s);
         }},
        {"covering_number", 10'000, {{"p", 2.0}, {"lambda_min", 1.0}, {"delta", 1.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_covering_number(as_int(a, "p"), a.at("lambda_min"), a.at("delta"), n, s);
         }},
        {"heavy_tail_vector", 2'000, {{"phi", 0.3}, {"T", 5'000.0}, {"p", 3.0}},
         [](const Params& a, std::int64_t n, std::uint64_t s) {
             return falsify_heavy_tail_vector(a.at("phi"), as_int(a, "T"), as_int(a, "p"), n, s);
         }},
        {"small_ball", 1'000'000,
         {{"t_dof", kInf}, {"kappa1", 1.0 / std::sqrt(2.0)}, {"p", 3.0}, {"directions", 100.0}},
         small_ball_check},
    };
    return entries;
}

const CheckEntry& find_entry(const std::string& name) {
    for (const auto& e : registry()) {
        if (e.name == name) return e;
    }
    std::string known;
    for (const auto& e : registry()) known += (known.empty() ? "" : ", ") + e.name;
    throw ConfigError("unknown check '" + name + "' (known: " + known + ")");
}

}  // namespace

std::vector<std::string> check_names() {
    std::vector<std::string> names;
    for (const auto& e : registry()) names.push_back(e.name);
    return names;
}

std::map<std::string, double> check_defaults(const std::string& name) {
    return find_entry(name).defaults;
}

InequalityCheck run_named_check(const std::string& name, const CheckOptions& options) {
    const CheckEntry& entry = find_entry(name);
    Params args = entry.defaults;
    for (const auto& [key, value] : options.params) {
        auto it = args.find(key);
        if (it == args.end()) throw ConfigError("check '" + name + "' has no parameter '" + key + "'");
        it->second = value;
    }
    const std::int64_t draws = options.draws.value_or(entry.default_draws);
    if (draws < 2) throw ConfigError("draws must be >= 2");
    try {
        return entry.run(args, draws, options.seed.value_or(kDefaultCheckSeed));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("check '" + name + "': " + e.what());
    }
}

}  // namespace ermlab
