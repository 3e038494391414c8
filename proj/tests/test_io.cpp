#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "ermlab/errors.hpp"
#include "ermlab/io.hpp"

using namespace ermlab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "dgp": {"kind": "gaussian_ar1", "noise_sd": 1.0, "ar_coeff": 0.5,
          "covariance": {"kind": "identity"}, "coefficients": {"kind": "ones"}},
  "T_grid": [100, 200, 400, 800],
  "K_p": 1.0,
  "r_p": 0.3,
  "base_seed": 7,
  "theorem": "thm41"
})";

std::string with(const std::string& base, const std::string& extra) {
    // Insert extra top-level members before the closing brace.
    const auto pos = base.rfind('}');
    return base.substr(0, pos) + "," + extra + "}";
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ermlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal config gets harness defaults") {
    const RunConfig cfg = parse_config(kMinimal);
    CHECK(cfg.plan.n_reps == 200);
    CHECK(cfg.formats == std::vector<std::string>{"csv"});
    CHECK(cfg.checks.empty());
    CHECK(cfg.plan.threads == 1);
    CHECK(cfg.plan.theorem == Theorem::thm41);
    CHECK(cfg.plan.T_grid.size() == 4);
}

TEST_CASE("infeasible growth exponent names Assumption 3") {
    std::string text = kMinimal;
    text.replace(text.find("\"r_p\": 0.3"), 10, "\"r_p\": 0.6");
    const std::string err = error_of(text);
    CHECK(err.find("r_p") != std::string::npos);
    CHECK(err.find("Assumption 3") != std::string::npos);
    CHECK(err.find("0.5") != std::string::npos);
}

TEST_CASE("duplicate keys are reported with their location") {
    const std::string text = R"({"dgp": {"kind": "gaussian_iid", "noise_sd": 1, "noise_sd": 2}})";
    const std::string err = error_of(text);
    CHECK(err.find("duplicate key") != std::string::npos);
    CHECK(err.find("/dgp/noise_sd") != std::string::npos);
    const std::string arr = R"({"checks": [{"name": "davydov"}, {"name": "a", "name": "b"}]})";
    CHECK(error_of(arr).find("/checks/1/name") != std::string::npos);
}

TEST_CASE("strict schema") {
    CHECK(error_of(with(kMinimal, R"("bogus": 1)")).find("unknown key 'bogus'") != std::string::npos);
    std::string missing = kMinimal;
    missing.replace(missing.find("\"noise_sd\": 1.0, "), 17, "");
    CHECK(error_of(missing).find("dgp.noise_sd") != std::string::npos);
    CHECK(error_of(with(kMinimal, R"("formats": [])")).find("formats") != std::string::npos);
    CHECK(error_of(with(kMinimal, R"("formats": ["xml"])")).find("formats") != std::string::npos);
    CHECK(error_of(with(kMinimal, R"("checks": ["nope"])")).find("unknown check") != std::string::npos);
    CHECK(error_of(with(kMinimal, R"("checks": [{"name": "davydov", "params": {"zzz": 1}}])")).find("zzz") !=
          std::string::npos);
    CHECK(error_of(with(kMinimal, R"("n_reps": 1)")).find("n_reps") != std::string::npos);
    CHECK(error_of("{not json").find("malformed") != std::string::npos);
    std::string t = kMinimal;
    t.replace(t.find("gaussian_ar1"), 12, "student_t_ar1");
    CHECK(error_of(t).find("t_dof") != std::string::npos);
    std::string bad_sigma = kMinimal;
    bad_sigma.replace(bad_sigma.find(R"({"kind": "identity"})"), 20,
                      R"({"kind": "explicit", "matrix": [[1, 2], [2, 1]]})");
    CHECK(error_of(bad_sigma).find("Assumption 4") != std::string::npos);
    std::string het = kMinimal;
    het.replace(het.find("gaussian_ar1"), 12, "heterogeneous_sin");
    het = with(het, "");  // still missing hetero_amp
    CHECK_FALSE(error_of(het).empty());
}

TEST_CASE("shortest round-trip number formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(1e-300) == "1e-300");
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        CHECK(std::stod(format_double(v)) == v);
    }
    Json j;
    j["a"] = 0.30000000000000004;
    j["b"] = std::numeric_limits<double>::infinity();
    const std::string s = dump_json(j);
    CHECK(s.find("0.30000000000000004") != std::string::npos);
    CHECK(s.find("\"inf\"") != std::string::npos);
}

TEST_CASE("run writes both formats and they round-trip") {
    RunConfig cfg = parse_config(with(kMinimal, R"("n_reps": 10, "formats": ["csv", "json"],
        "checks": [{"name": "cone_probability", "draws": 20000}, "billingsley"],
        "small_ball": {"draws": 10000, "directions": 100})"));
    cfg.output_dir = scratch_dir("roundtrip").string();
    const RunOutcome out = run(cfg);
    CHECK(out.exit_code == kExitOk);
    const std::string json_text = read_file(cfg.output_dir + "/report.json");
    const std::string csv_text = read_file(cfg.output_dir + "/cells.csv");
    CHECK(csv_text.rfind("T,p,median_excess,mean_excess,q90_excess,bound,failure_prob,violation_freq,vacuous\n", 0) == 0);

    const ParsedReport parsed = parse_report_json(json_text);
    REQUIRE(parsed.report.cells.size() == out.report.cells.size());
    for (std::size_t i = 0; i < out.report.cells.size(); ++i) {
        const auto& a = out.report.cells[i];
        const auto& b = parsed.report.cells[i];
        CHECK(a.T == b.T);
        CHECK(a.p == b.p);
        CHECK(a.median_excess == b.median_excess);
        CHECK(a.mean_excess == b.mean_excess);
        CHECK(a.q90_excess == b.q90_excess);
        CHECK(a.bound == b.bound);
        CHECK(a.failure_prob == b.failure_prob);
        CHECK(a.violation_freq == b.violation_freq);
        CHECK(a.vacuous == b.vacuous);
        CHECK(a.certificate.K_sigma2 == b.certificate.K_sigma2);
        CHECK(a.certificate.inputs.K_alpha == b.certificate.inputs.K_alpha);
        CHECK(a.certificate.inputs.kappa2 == b.certificate.inputs.kappa2);
    }
    CHECK(parsed.report.rate_slope == out.report.rate_slope);
    REQUIRE(parsed.report.small_ball.has_value());
    CHECK(parsed.report.small_ball->frequencies == out.report.small_ball->frequencies);
    REQUIRE(parsed.checks.size() == 2);
    CHECK(parsed.checks[0].name == "cone_probability");
    CHECK(parsed.checks[0].passed);
    CHECK(parsed.checks[0].empirical_value == out.checks[0].empirical_value);
    CHECK(parsed.checks[1].margin == out.checks[1].margin);

    const auto csv_cells = parse_cells_csv(csv_text);
    REQUIRE(csv_cells.size() == out.report.cells.size());
    for (std::size_t i = 0; i < csv_cells.size(); ++i) {
        CHECK(csv_cells[i].median_excess == out.report.cells[i].median_excess);
        CHECK(csv_cells[i].q90_excess == out.report.cells[i].q90_excess);
        CHECK(csv_cells[i].bound == out.report.cells[i].bound);
        CHECK(csv_cells[i].vacuous == out.report.cells[i].vacuous);
    }

    // Second run: byte-identical files.
    RunConfig again = cfg;
    again.output_dir = scratch_dir("roundtrip_again").string();
    (void)run(again);
    CHECK(read_file(again.output_dir + "/report.json") == json_text);
    CHECK(read_file(again.output_dir + "/cells.csv") == csv_text);
}

TEST_CASE("noiseless smoke run has zero violations") {
    std::string text = kMinimal;
    text.replace(text.find("\"noise_sd\": 1.0"), 15, "\"noise_sd\": 0.0");
    RunConfig cfg = parse_config(with(text, R"("n_reps": 5)"));
    cfg.output_dir = scratch_dir("noiseless").string();
    const RunOutcome out = run(cfg);
    CHECK(out.exit_code == kExitOk);
    for (const auto& c : parse_cells_csv(read_file(cfg.output_dir + "/cells.csv"))) CHECK(c.violation_freq == 0.0);
}

TEST_CASE("failed checks map to exit code 3") {
    RunConfig cfg = parse_config(with(kMinimal, R"("n_reps": 5,
        "checks": [{"name": "paley_zygmund", "draws": 1000, "params": {"theta": 0.0}}])"));
    cfg.output_dir = scratch_dir("failing").string();
    // theta = 0 makes the bound 1/3 and the probability 1: still passes.
    CHECK(run(cfg).exit_code == kExitOk);
    RunConfig bad = parse_config(with(kMinimal, R"("n_reps": 5,
        "checks": [{"name": "small_ball", "draws": 10000, "params": {"kappa1": 0.999, "t_dof": 5}}])"));
    bad.output_dir = scratch_dir("failing2").string();
    CHECK(run(bad).exit_code == kExitOk);
    // Two draws with this seed see no exceedance of a 0.48-probability event.
    RunConfig weak = parse_config(with(kMinimal, R"("n_reps": 5,
        "checks": [{"name": "paley_zygmund", "draws": 2, "seed": 1}])"));
    weak.output_dir = scratch_dir("failing3").string();
    const RunOutcome out = run(weak);
    CHECK(out.exit_code == kExitCheckFailed);
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].find("paley_zygmund") != std::string::npos);
}

TEST_CASE("output directory override and I/O errors") {
    RunConfig cfg = parse_config(with(kMinimal, R"("n_reps": 3)"));
    cfg.output_dir = scratch_dir("ignored").string();
    const fs::path env_dir = scratch_dir("env");
    ::setenv(kOutputDirEnv, env_dir.c_str(), 1);
    const RunOutcome out = run(cfg);
    ::unsetenv(kOutputDirEnv);
    CHECK(out.output_dir == env_dir.string());
    CHECK(fs::exists(env_dir / "cells.csv"));
    CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "cells.csv"));

    const fs::path blocker = scratch_dir("blocker");
    write_file(blocker.string(), "not a directory");
    cfg.output_dir = (blocker / "sub").string();
    CHECK_THROWS_AS((void)run(cfg), IoError);
    CHECK_THROWS_AS((void)read_file("/nonexistent/config.json"), IoError);
}

TEST_CASE("constants files") {
    const BoundInputs in = parse_bound_inputs(R"({"K_m": 1, "r_m": 4, "K_alpha": 1, "r_alpha": 1, "K_p": 1,
        "r_p": 0, "lambda_min": 1, "kappa1": 1, "kappa2": 1, "T": 10000})");
    CHECK(in.p == 1);
    CHECK(in.K_Sigma == 1.0);
    const BoundInputs inf = parse_bound_inputs(R"({"K_m": 1, "r_m": 4, "K_alpha": "inf", "r_alpha": 1, "K_p": 1,
        "r_p": 0, "lambda_min": 1, "kappa1": 1, "kappa2": 1, "T": 10, "p": 1, "H": 5})");
    CHECK(std::isinf(inf.K_alpha));
    CHECK(inf.H == 5);
    CHECK_THROWS_AS((void)parse_bound_inputs(R"({"K_m": 1})"), ConfigError);
    const BenchmarkInputs b = parse_benchmark_inputs(R"({"sigma2": 1, "kappa1": 1, "kappa2": 1, "p": 1, "T": 1e6, "x": 1})");
    CHECK(b.T == 1e6);
}
