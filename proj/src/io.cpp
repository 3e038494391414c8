#include "ermlab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ermlab/errors.hpp"

namespace ermlab {

namespace {

// --- strict parsing ----------------------------------------------------------

// Tracks the location of every parse event so duplicate keys can be reported
// as a JSON pointer.
class DuplicateKeyGuard {
public:
    bool operator()(int /*depth*/, Json::parse_event_t event, Json& parsed) {
        using E = Json::parse_event_t;
        switch (event) {
            case E::object_start: frames_.push_back({false, {}, {}, 0}); break;
            case E::array_start: frames_.push_back({true, {}, {}, 0}); break;
            case E::key: {
                Frame& f = frames_.back();
                f.current = parsed.get<std::string>();
                if (!f.keys.insert(f.current).second) {
                    throw ConfigError("duplicate key at " + pointer());
                }
                break;
            }
            case E::object_end:
            case E::array_end:
                frames_.pop_back();
                advance();
                break;
            case E::value: advance(); break;
        }
        return true;
    }

private:
    struct Frame {
        bool array;
        std::set<std::string> keys;
        std::string current;
        int index;
    };

    void advance() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }

    std::string pointer() const {
        std::string out;
        for (const Frame& f : frames_) out += "/" + (f.array ? std::to_string(f.index) : f.current);
        return out;
    }

    std::vector<Frame> frames_;
};

Json parse_strict(std::string_view text) {
    DuplicateKeyGuard guard;
    try {
        return Json::parse(text.begin(), text.end(),
                           [&guard](int d, Json::parse_event_t e, Json& j) { return guard(d, e, j); });
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

double number_value(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "Infinity") return kInf;
    }
    throw ConfigError("key '" + where + "' must be a number");
}

// Reads the fields of a JSON object and rejects whatever was not consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError((path_.empty() ? std::string("document") : "key '" + path_ + "'") +
                              " must be a JSON object");
        }
    }

    const Json* find(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const Json& require(const std::string& key) {
        const Json* v = find(key);
        if (!v) throw ConfigError("missing required key '" + join(path_, key) + "'");
        return *v;
    }

    double number(const std::string& key) { return number_value(require(key), join(path_, key)); }

    std::optional<double> opt_number(const std::string& key) {
        const Json* v = find(key);
        if (!v) return std::nullopt;
        return number_value(*v, join(path_, key));
    }

    std::int64_t integer(const Json& v, const std::string& key) const {
        if (!v.is_number_integer()) throw ConfigError("key '" + join(path_, key) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    std::int64_t integer(const std::string& key) { return integer(require(key), key); }

    std::optional<std::int64_t> opt_integer(const std::string& key) {
        const Json* v = find(key);
        if (!v) return std::nullopt;
        return integer(*v, key);
    }

    std::string string(const std::string& key) {
        const Json& v = require(key);
        if (!v.is_string()) throw ConfigError("key '" + join(path_, key) + "' must be a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) throw ConfigError("unknown key '" + join(path_, key) + "'");
        }
    }

    const std::string& path() const { return path_; }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Eigen::VectorXd vector_value(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError("key '" + where + "' must be a nonempty array");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out(i) = number_value(v[i], where);
    return out;
}

Eigen::MatrixXd matrix_value(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError("key '" + where + "' must be a nonempty array of rows");
    const std::size_t n = v.size();
    Eigen::MatrixXd out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!v[i].is_array() || v[i].size() != n) throw ConfigError("key '" + where + "' must be a square matrix");
        for (std::size_t k = 0; k < n; ++k) out(i, k) = number_value(v[i][k], where);
    }
    return out;
}

const char* covariance_kind_name(CovarianceRule::Kind k) {
    switch (k) {
        case CovarianceRule::Kind::identity: return "identity";
        case CovarianceRule::Kind::toeplitz: return "toeplitz";
        case CovarianceRule::Kind::equicorrelated: return "equicorrelated";
        case CovarianceRule::Kind::explicit_matrix: return "explicit";
    }
    return "identity";
}

const char* coefficient_kind_name(CoefficientRule::Kind k) {
    switch (k) {
        case CoefficientRule::Kind::ones: return "ones";
        case CoefficientRule::Kind::harmonic: return "harmonic";
        case CoefficientRule::Kind::explicit_vector: return "explicit";
    }
    return "ones";
}

CovarianceRule parse_covariance(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    CovarianceRule c;
    const std::string kind = r.string("kind");
    if (kind == "identity") {
        c.kind = CovarianceRule::Kind::identity;
    } else if (kind == "toeplitz" || kind == "equicorrelated") {
        c.kind = kind == "toeplitz" ? CovarianceRule::Kind::toeplitz : CovarianceRule::Kind::equicorrelated;
        c.rho = r.number("rho");
        if (!(c.rho > -1.0 && c.rho < 1.0)) {
            throw ConfigError("key '" + join(path, "rho") + "': Assumption 4: rho must lie in (-1, 1)");
        }
    } else if (kind == "explicit") {
        c.kind = CovarianceRule::Kind::explicit_matrix;
        c.matrix = matrix_value(r.require("matrix"), join(path, "matrix"));
    } else {
        throw ConfigError("key '" + join(path, "kind") + "': unknown covariance kind '" + kind + "'");
    }
    r.finish();
    return c;
}

CoefficientRule parse_coefficients(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    CoefficientRule c;
    const std::string kind = r.string("kind");
    if (kind == "ones") {
        c.kind = CoefficientRule::Kind::ones;
    } else if (kind == "harmonic") {
        c.kind = CoefficientRule::Kind::harmonic;
    } else if (kind == "explicit") {
        c.kind = CoefficientRule::Kind::explicit_vector;
        c.values = vector_value(r.require("values"), join(path, "values"));
    } else {
        throw ConfigError("key '" + join(path, "kind") + "': unknown coefficient kind '" + kind + "'");
    }
    r.finish();
    return c;
}

DgpFamily parse_family(const Json& j) {
    ObjectReader r(j, "dgp");
    DgpFamily f;
    try {
        f.kind = dgp_kind_from_string(r.string("kind"));
    } catch (const DomainError& e) {
        throw ConfigError("key 'dgp.kind': " + std::string(e.what()));
    }
    f.noise_sd = r.number("noise_sd");
    if (f.kind == DgpKind::gaussian_iid) {
        f.ar_coeff = r.opt_number("ar_coeff").value_or(0.0);
    } else {
        f.ar_coeff = r.number("ar_coeff");
    }
    if (f.kind == DgpKind::student_t_ar1) {
        f.t_dof = r.number("t_dof");
    } else if (auto v = r.opt_number("t_dof")) {
        f.t_dof = *v;
    }
    if (f.kind == DgpKind::heterogeneous_sin) {
        f.hetero_amp = r.number("hetero_amp");
    } else if (auto v = r.opt_number("hetero_amp")) {
        f.hetero_amp = *v;
    }
    f.covariance = parse_covariance(r.require("covariance"), "dgp.covariance");
    f.coefficients = parse_coefficients(r.require("coefficients"), "dgp.coefficients");
    r.finish();
    return f;
}

CheckRequest parse_check(const Json& j, std::size_t index) {
    const std::string path = "checks[" + std::to_string(index) + "]";
    CheckRequest req;
    if (j.is_string()) {
        req.name = j.get<std::string>();
    } else {
        ObjectReader r(j, path);
        req.name = r.string("name");
        req.options.draws = r.opt_integer("draws");
        if (auto s = r.opt_integer("seed")) {
            if (*s < 0) throw ConfigError("key '" + join(path, "seed") + "' must be >= 0");
            req.options.seed = static_cast<std::uint64_t>(*s);
        }
        if (const Json* params = r.find("params")) {
            ObjectReader pr(*params, join(path, "params"));
            for (const auto& [key, value] : params->items()) {
                req.options.params[key] = pr.number(key);
            }
            pr.finish();
        }
        r.finish();
    }
    const auto names = check_names();
    if (std::find(names.begin(), names.end(), req.name) == names.end()) {
        throw ConfigError("key '" + path + "': unknown check '" + req.name + "'");
    }
    const auto defaults = check_defaults(req.name);
    for (const auto& [key, value] : req.options.params) {
        if (!defaults.count(key)) {
            throw ConfigError("key '" + path + ".params." + key + "': check '" + req.name +
                              "' has no such parameter");
        }
    }
    if (req.options.draws && *req.options.draws < 2) {
        throw ConfigError("key '" + path + ".draws' must be >= 2");
    }
    return req;
}

// Wraps plan validation so that errors name the responsible key.
void validate_plan(const ExperimentPlan& plan) {
    try {
        (void)make_dgp(plan.family.instantiate(plan.family.fixed_dimension().value_or(1)));
    } catch (const AssumptionViolation& e) {
        throw ConfigError("key 'dgp': " + std::string(e.what()));
    } catch (const DomainError& e) {
        throw ConfigError("key 'dgp': " + std::string(e.what()));
    }
    const Dgp probe = make_dgp(plan.family.instantiate(plan.family.fixed_dimension().value_or(1)));
    try {
        check_predictor_growth(plan.r_p, probe.truth.K_alpha, probe.truth.r_alpha, probe.truth.r_m);
    } catch (const AssumptionViolation& e) {
        throw ConfigError("key 'r_p': " + std::string(e.what()));
    }
    try {
        validate(plan);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("plan: " + std::string(e.what()));
    }
}

// --- output ----------------------------------------------------------------

void dump_value(const Json& j, int indent, std::string& out) {
    const std::string pad(indent + 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(key).dump() + ": ";
                dump_value(value, indent + 2, out);
            }
            out += "\n" + std::string(indent, ' ') + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& value : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                dump_value(value, indent + 2, out);
            }
            out += "\n" + std::string(indent, ' ') + "]";
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) {
                out += format_double(v);
            } else {
                out += std::isnan(v) ? "\"nan\"" : (v > 0 ? "\"inf\"" : "\"-inf\"");
            }
            return;
        }
        default: out += j.dump(); return;
    }
}

double read_double(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw IoError("unexpected string '" + s + "' in numeric field");
    }
    return j.get<double>();
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json bound_inputs_json(const BoundInputs& in) {
    Json j;
    j["K_m"] = in.K_m;
    j["r_m"] = in.r_m;
    j["K_alpha"] = in.K_alpha;
    j["r_alpha"] = in.r_alpha;
    j["K_p"] = in.K_p;
    j["r_p"] = in.r_p;
    j["lambda_min"] = in.lambda_min;
    j["K_Sigma"] = in.K_Sigma;
    j["kappa1"] = in.kappa1;
    j["kappa2"] = in.kappa2;
    j["T"] = in.T;
    j["p"] = in.p;
    j["H"] = in.H ? Json(*in.H) : Json(nullptr);
    return j;
}

BoundInputs bound_inputs_from_json(const Json& j) {
    BoundInputs in;
    in.K_m = read_double(j.at("K_m"));
    in.r_m = read_double(j.at("r_m"));
    in.K_alpha = read_double(j.at("K_alpha"));
    in.r_alpha = read_double(j.at("r_alpha"));
    in.K_p = read_double(j.at("K_p"));
    in.r_p = read_double(j.at("r_p"));
    in.lambda_min = read_double(j.at("lambda_min"));
    in.K_Sigma = read_double(j.at("K_Sigma"));
    in.kappa1 = read_double(j.at("kappa1"));
    in.kappa2 = read_double(j.at("kappa2"));
    in.T = j.at("T").get<int>();
    in.p = j.at("p").get<int>();
    if (!j.at("H").is_null()) in.H = j.at("H").get<int>();
    return in;
}

BoundCertificate certificate_from_json(const Json& j) {
    BoundCertificate c;
    c.theorem = theorem_from_string(j.at("theorem").get<std::string>());
    c.K_sigma2 = read_double(j.at("K_sigma2"));
    c.bound = read_double(j.at("bound"));
    c.failure_prob = read_double(j.at("failure_prob"));
    c.vacuous = j.at("vacuous").get<bool>();
    if (!j.at("K_H").is_null()) c.K_H = read_double(j.at("K_H"));
    if (!j.at("oos_term").is_null()) c.oos_term = read_double(j.at("oos_term"));
    if (j.contains("inputs")) c.inputs = bound_inputs_from_json(j.at("inputs"));
    if (j.contains("benchmark_inputs")) {
        const Json& b = j.at("benchmark_inputs");
        BenchmarkInputs in;
        in.sigma2 = read_double(b.at("sigma2"));
        in.kappa1 = read_double(b.at("kappa1"));
        in.kappa2 = read_double(b.at("kappa2"));
        in.p = read_double(b.at("p"));
        in.T = read_double(b.at("T"));
        in.x = read_double(b.at("x"));
        c.benchmark_inputs = in;
    }
    return c;
}

InequalityCheck check_from_json(const Json& j) {
    InequalityCheck c;
    c.name = j.at("name").get<std::string>();
    c.lower_bound = j.at("lower_bound").get<bool>();
    c.bound_value = read_double(j.at("bound_value"));
    c.empirical_value = read_double(j.at("empirical_value"));
    c.margin = read_double(j.at("margin"));
    c.se = read_double(j.at("se"));
    c.n_samples = j.at("n_samples").get<std::int64_t>();
    c.passed = j.at("passed").get<bool>();
    c.vacuous = j.at("vacuous").get<bool>();
    return c;
}

const char* kCsvHeader =
    "T,p,median_excess,mean_excess,q90_excess,bound,failure_prob,violation_freq,vacuous";

double parse_csv_double(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("bad number '" + s + "' in cells.csv");
    return v;
}

std::string csv_double(double v) {
    if (std::isfinite(v)) return format_double(v);
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    const Json doc = parse_strict(text);
    ObjectReader r(doc, "");
    RunConfig cfg;
    ExperimentPlan& plan = cfg.plan;
    plan.family = parse_family(r.require("dgp"));

    const Json& grid = r.require("T_grid");
    if (!grid.is_array() || grid.empty()) throw ConfigError("key 'T_grid' must be a nonempty array");
    for (const auto& v : grid) {
        if (!v.is_number_integer()) throw ConfigError("key 'T_grid' must contain integers");
        plan.T_grid.push_back(v.get<int>());
    }
    plan.K_p = r.number("K_p");
    plan.r_p = r.number("r_p");
    const std::int64_t seed = r.integer("base_seed");
    if (seed < 0) throw ConfigError("key 'base_seed' must be >= 0");
    plan.base_seed = static_cast<std::uint64_t>(seed);
    try {
        plan.theorem = theorem_from_string(r.string("theorem"));
    } catch (const DomainError& e) {
        throw ConfigError("key 'theorem': " + std::string(e.what()));
    }
    if (auto h = r.opt_integer("H")) plan.H = static_cast<int>(*h);
    if (auto n = r.opt_integer("n_reps")) plan.n_reps = static_cast<int>(*n);
    if (auto t = r.opt_integer("threads")) plan.threads = static_cast<int>(*t);

    if (const Json* sb = r.find("small_ball")) {
        ObjectReader s(*sb, "small_ball");
        if (auto th = s.opt_number("theta")) plan.small_ball_theta = *th;
        if (auto d = s.opt_integer("draws")) plan.small_ball_draws = *d;
        if (auto d = s.opt_integer("directions")) plan.small_ball_directions = static_cast<int>(*d);
        s.finish();
    }

    if (const Json* out = r.find("output_dir")) {
        if (!out->is_string() || out->get<std::string>().empty()) {
            throw ConfigError("key 'output_dir' must be a nonempty string");
        }
        cfg.output_dir = out->get<std::string>();
    }
    if (const Json* formats = r.find("formats")) {
        if (!formats->is_array() || formats->empty()) {
            throw ConfigError("key 'formats' must be a nonempty array");
        }
        cfg.formats.clear();
        for (const auto& f : *formats) {
            if (!f.is_string() || (f != "csv" && f != "json")) {
                throw ConfigError("key 'formats' accepts only \"csv\" and \"json\"");
            }
            if (std::find(cfg.formats.begin(), cfg.formats.end(), f.get<std::string>()) != cfg.formats.end()) {
                throw ConfigError("key 'formats' lists " + f.dump() + " twice");
            }
            cfg.formats.push_back(f.get<std::string>());
        }
    }
    if (const Json* checks = r.find("checks")) {
        if (!checks->is_array()) throw ConfigError("key 'checks' must be an array");
        for (std::size_t i = 0; i < checks->size(); ++i) cfg.checks.push_back(parse_check((*checks)[i], i));
    }
    r.finish();
    validate_plan(plan);
    return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

BoundInputs parse_bound_inputs(std::string_view text) {
    const Json doc = parse_strict(text);
    ObjectReader r(doc, "");
    BoundInputs in;
    in.K_m = r.number("K_m");
    in.r_m = r.number("r_m");
    in.K_alpha = r.number("K_alpha");
    in.r_alpha = r.number("r_alpha");
    in.K_p = r.number("K_p");
    in.r_p = r.number("r_p");
    in.lambda_min = r.number("lambda_min");
    in.K_Sigma = r.opt_number("K_Sigma").value_or(1.0);
    in.kappa1 = r.number("kappa1");
    in.kappa2 = r.number("kappa2");
    in.T = static_cast<int>(r.integer("T"));
    if (auto p = r.opt_integer("p")) {
        in.p = static_cast<int>(*p);
    } else {
        in.p = predictor_count(in.K_p, in.r_p, in.T);
    }
    if (auto h = r.opt_integer("H")) in.H = static_cast<int>(*h);
    r.finish();
    return in;
}

BenchmarkInputs parse_benchmark_inputs(std::string_view text) {
    const Json doc = parse_strict(text);
    ObjectReader r(doc, "");
    BenchmarkInputs in;
    in.sigma2 = r.number("sigma2");
    in.kappa1 = r.number("kappa1");
    in.kappa2 = r.number("kappa2");
    in.p = r.number("p");
    in.T = r.number("T");
    in.x = r.number("x");
    r.finish();
    return in;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw IoError("cannot format number");
    return std::string(buf, ptr);
}

std::string dump_json(const Json& j) {
    std::string out;
    dump_value(j, 0, out);
    out += "\n";
    return out;
}

Json to_json(const InequalityCheck& c) {
    Json j;
    j["name"] = c.name;
    j["lower_bound"] = c.lower_bound;
    j["bound_value"] = c.bound_value;
    j["empirical_value"] = c.empirical_value;
    j["margin"] = c.margin;
    j["se"] = c.se;
    j["n_samples"] = c.n_samples;
    j["passed"] = c.passed;
    j["vacuous"] = c.vacuous;
    return j;
}

Json to_json(const BoundCertificate& c) {
    Json j;
    j["theorem"] = std::string(to_string(c.theorem));
    j["K_sigma2"] = c.K_sigma2;
    j["bound"] = c.bound;
    j["failure_prob"] = c.failure_prob;
    j["vacuous"] = c.vacuous;
    j["K_H"] = optional_number(c.K_H);
    j["oos_term"] = optional_number(c.oos_term);
    if (c.benchmark_inputs) {
        const BenchmarkInputs& b = *c.benchmark_inputs;
        j["benchmark_inputs"] = {{"sigma2", b.sigma2}, {"kappa1", b.kappa1}, {"kappa2", b.kappa2},
                                 {"p", b.p},           {"T", b.T},           {"x", b.x}};
    } else {
        j["inputs"] = bound_inputs_json(c.inputs);
    }
    return j;
}

Json to_json(const CellResult& c) {
    Json j;
    j["T"] = c.T;
    j["p"] = c.p;
    j["median_excess"] = c.median_excess;
    j["mean_excess"] = c.mean_excess;
    j["q90_excess"] = c.q90_excess;
    j["bound"] = c.bound;
    j["failure_prob"] = c.failure_prob;
    j["violation_freq"] = c.violation_freq;
    j["vacuous"] = c.vacuous;
    j["n_used"] = c.n_used;
    j["failed"] = c.failed;
    Json skipped = Json::array();
    for (const auto& s : c.skipped) skipped.push_back({{"rep", s.rep}, {"seed", s.seed}});
    j["skipped"] = skipped;
    j["certificate"] = to_json(c.certificate);
    return j;
}

Json to_json(const SmallBallEstimate& e) {
    Json j;
    j["kappa1"] = e.kappa1;
    j["min_freq"] = e.min_freq;
    j["max_freq"] = e.max_freq;
    j["se"] = e.se;
    j["analytic_kappa2"] = e.analytic_kappa2;
    j["n_draws"] = e.n_draws;
    j["n_directions"] = e.n_directions;
    j["frequencies"] = e.frequencies;
    return j;
}

Json to_json(const ExperimentPlan& plan) {
    const DgpFamily& f = plan.family;
    Json cov;
    cov["kind"] = covariance_kind_name(f.covariance.kind);
    if (f.covariance.kind == CovarianceRule::Kind::toeplitz ||
        f.covariance.kind == CovarianceRule::Kind::equicorrelated) {
        cov["rho"] = f.covariance.rho;
    }
    if (f.covariance.kind == CovarianceRule::Kind::explicit_matrix) {
        Json rows = Json::array();
        for (Eigen::Index i = 0; i < f.covariance.matrix.rows(); ++i) {
            Json row = Json::array();
            for (Eigen::Index k = 0; k < f.covariance.matrix.cols(); ++k) row.push_back(f.covariance.matrix(i, k));
            rows.push_back(row);
        }
        cov["matrix"] = rows;
    }
    Json coef;
    coef["kind"] = coefficient_kind_name(f.coefficients.kind);
    if (f.coefficients.kind == CoefficientRule::Kind::explicit_vector) {
        coef["values"] = std::vector<double>(f.coefficients.values.begin(), f.coefficients.values.end());
    }
    Json dgp;
    dgp["kind"] = std::string(to_string(f.kind));
    dgp["noise_sd"] = f.noise_sd;
    dgp["ar_coeff"] = f.ar_coeff;
    dgp["t_dof"] = f.t_dof;
    dgp["hetero_amp"] = f.hetero_amp;
    dgp["covariance"] = cov;
    dgp["coefficients"] = coef;

    Json j;
    j["dgp"] = dgp;
    j["T_grid"] = plan.T_grid;
    j["K_p"] = plan.K_p;
    j["r_p"] = plan.r_p;
    j["n_reps"] = plan.n_reps;
    j["base_seed"] = plan.base_seed;
    j["theorem"] = std::string(to_string(plan.theorem));
    j["H"] = plan.H ? Json(*plan.H) : Json(nullptr);
    j["small_ball"] = {{"theta", plan.small_ball_theta},
                       {"draws", plan.small_ball_draws},
                       {"directions", plan.small_ball_directions}};
    return j;
}

std::string report_json(const RunConfig& config, const ExperimentReport& report,
                        const std::vector<InequalityCheck>& checks) {
    Json j;
    j["plan"] = to_json(config.plan);
    Json cells = Json::array();
    for (const auto& c : report.cells) cells.push_back(to_json(c));
    j["cells"] = cells;
    j["rate_slope"] = optional_number(report.rate_slope);
    j["small_ball"] = report.small_ball ? to_json(*report.small_ball) : Json(nullptr);
    Json cj = Json::array();
    for (const auto& c : checks) cj.push_back(to_json(c));
    j["checks"] = cj;
    return dump_json(j);
}

std::string cells_csv(const ExperimentReport& report) {
    std::string out = kCsvHeader;
    out += "\n";
    for (const auto& c : report.cells) {
        out += std::to_string(c.T) + "," + std::to_string(c.p) + "," + csv_double(c.median_excess) + "," +
               csv_double(c.mean_excess) + "," + csv_double(c.q90_excess) + "," + csv_double(c.bound) + "," +
               csv_double(c.failure_prob) + "," + csv_double(c.violation_freq) + "," +
               (c.vacuous ? "true" : "false") + "\n";
    }
    return out;
}

ParsedReport parse_report_json(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw IoError(std::string("report.json is malformed: ") + e.what());
    }
    ParsedReport out;
    try {
        for (const auto& cj : j.at("cells")) {
            CellResult c;
            c.T = cj.at("T").get<int>();
            c.p = cj.at("p").get<int>();
            c.median_excess = read_double(cj.at("median_excess"));
            c.mean_excess = read_double(cj.at("mean_excess"));
            c.q90_excess = read_double(cj.at("q90_excess"));
            c.bound = read_double(cj.at("bound"));
            c.failure_prob = read_double(cj.at("failure_prob"));
            c.violation_freq = read_double(cj.at("violation_freq"));
            c.vacuous = cj.at("vacuous").get<bool>();
            c.n_used = cj.at("n_used").get<int>();
            c.failed = cj.at("failed").get<bool>();
            for (const auto& s : cj.at("skipped")) {
                c.skipped.push_back({s.at("rep").get<int>(), s.at("seed").get<std::uint64_t>()});
            }
            c.certificate = certificate_from_json(cj.at("certificate"));
            out.report.cells.push_back(std::move(c));
        }
        if (!j.at("rate_slope").is_null()) out.report.rate_slope = read_double(j.at("rate_slope"));
        if (!j.at("small_ball").is_null()) {
            const Json& s = j.at("small_ball");
            SmallBallEstimate e;
            e.kappa1 = read_double(s.at("kappa1"));
            e.min_freq = read_double(s.at("min_freq"));
            e.max_freq = read_double(s.at("max_freq"));
            e.se = read_double(s.at("se"));
            e.analytic_kappa2 = read_double(s.at("analytic_kappa2"));
            e.n_draws = s.at("n_draws").get<std::int64_t>();
            e.n_directions = s.at("n_directions").get<int>();
            for (const auto& f : s.at("frequencies")) e.frequencies.push_back(read_double(f));
            out.report.small_ball = e;
        }
        for (const auto& c : j.at("checks")) out.checks.push_back(check_from_json(c));
    } catch (const Json::exception& e) {
        throw IoError(std::string("report.json has an unexpected layout: ") + e.what());
    }
    return out;
}

std::vector<CellResult> parse_cells_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw IoError("cells.csv has an unexpected header");
    std::vector<CellResult> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 9) throw IoError("cells.csv row has " + std::to_string(f.size()) + " fields");
        CellResult c;
        c.T = std::stoi(f[0]);
        c.p = std::stoi(f[1]);
        c.median_excess = parse_csv_double(f[2]);
        c.mean_excess = parse_csv_double(f[3]);
        c.q90_excess = parse_csv_double(f[4]);
        c.bound = parse_csv_double(f[5]);
        c.failure_prob = parse_csv_double(f[6]);
        c.violation_freq = parse_csv_double(f[7]);
        if (f[8] != "true" && f[8] != "false") throw IoError("cells.csv vacuous column must be true/false");
        c.vacuous = f[8] == "true";
        cells.push_back(c);
    }
    return cells;
}

std::string resolve_output_dir(const RunConfig& config) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return config.output_dir;
}

RunOutcome run(const RunConfig& config) {
    RunOutcome out;
    out.output_dir = resolve_output_dir(config);
    out.report = run_experiment(config.plan);
    for (const auto& req : config.checks) out.checks.push_back(run_named_check(req.name, req.options));

    for (const auto& c : out.report.cells) {
        const std::string cell = "cell T=" + std::to_string(c.T);
        if (c.failed) {
            out.failures.push_back(cell + ": " + std::to_string(c.skipped.size()) +
                                   " singular designs exceed 1% of replications");
        }
        if (!c.vacuous && c.violation_freq > c.failure_prob) {
            out.failures.push_back(cell + ": violation frequency " + format_double(c.violation_freq) +
                                   " exceeds failure probability " + format_double(c.failure_prob));
        }
    }
    for (const auto& c : out.checks) {
        if (!c.passed) out.failures.push_back("check " + c.name + " failed (margin " + format_double(c.margin) + ")");
    }
    out.exit_code = out.failures.empty() ? kExitOk : kExitCheckFailed;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out.output_dir + "': " + ec.message());
    const fs::path dir(out.output_dir);
    for (const auto& format : config.formats) {
        if (format == "json") {
            write_file((dir / "report.json").string(), report_json(config, out.report, out.checks));
        } else if (format == "csv") {
            write_file((dir / "cells.csv").string(), cells_csv(out.report));
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace ermlab
