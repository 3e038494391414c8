// Python bindings. Structured values cross the boundary as JSON text, which the
// package wrapper turns into dicts; arrays go through the Eigen type casters.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ermlab/bounds.hpp"
#include "ermlab/checks.hpp"
#include "ermlab/erm.hpp"
#include "ermlab/errors.hpp"
#include "ermlab/io.hpp"
#include "ermlab/mc_verify.hpp"

namespace py = pybind11;
using namespace ermlab;

namespace {

std::string bound_json(const std::string& theorem_name, const std::string& constants) {
    const Theorem theorem = theorem_from_string(theorem_name);
    const BoundCertificate cert = theorem == Theorem::benchmark
                                      ? benchmark_certificate(parse_benchmark_inputs(constants))
                                      : certificate(theorem, parse_bound_inputs(constants));
    return dump_json(to_json(cert));
}

std::string check_json(const std::string& name, std::optional<std::int64_t> draws,
                       std::optional<std::uint64_t> seed, const std::map<std::string, double>& params) {
    return dump_json(to_json(run_named_check(name, CheckOptions{draws, seed, params})));
}

std::string experiment_json(const std::string& config_text, std::optional<int> threads) {
    RunConfig config = parse_config(config_text);
    if (threads) config.plan.threads = *threads;
    ExperimentReport report;
    {
        py::gil_scoped_release release;
        report = run_experiment(config.plan);
    }
    return report_json(config, report, {});
}

py::dict run_config(const std::string& config_text, std::optional<std::string> output_dir) {
    RunConfig config = parse_config(config_text);
    if (output_dir) config.output_dir = *output_dir;
    RunOutcome out;
    {
        py::gil_scoped_release release;
        out = run(config);
    }
    py::dict d;
    d["exit_code"] = out.exit_code;
    d["output_dir"] = out.output_dir;
    d["failures"] = out.failures;
    d["report"] = report_json(config, out.report, out.checks);
    return d;
}

}  // namespace

PYBIND11_MODULE(_ermlab, m) {
    m.doc() = "Least-squares oracle-inequality laboratory (native core)";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<AssumptionViolation>(m, "AssumptionViolation", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<SingularDesign>(m, "SingularDesign", base.ptr());
    py::register_exception<BlockingCondition>(m, "BlockingCondition", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def(
        "fit_least_squares",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, std::uint64_t seed) {
            return fit_least_squares(X, Y, seed).theta;
        },
        py::arg("X"), py::arg("Y"), py::arg("seed") = 0);
    m.def(
        "empirical_risk",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const Eigen::VectorXd& theta) {
            return empirical_risk(X, Y, theta);
        },
        py::arg("X"), py::arg("Y"), py::arg("theta"));

    m.def("mixing_series", &mixing_series, py::arg("K_alpha"), py::arg("r_alpha"), py::arg("exponent"));
    m.def("k_sigma2", py::overload_cast<double, double, double, double>(&k_sigma2), py::arg("K_m"),
          py::arg("r_m"), py::arg("K_alpha"), py::arg("r_alpha"));
    m.def("k_sigma2_prime", py::overload_cast<double, double, double, double>(&k_sigma2_prime), py::arg("K_m"),
          py::arg("r_m"), py::arg("K_alpha"), py::arg("r_alpha"));
    m.def("k_h", &k_h, py::arg("K_m"), py::arg("lambda_min"), py::arg("K_alpha"), py::arg("r_alpha"));
    m.def("predictor_count", &predictor_count, py::arg("K_p"), py::arg("r_p"), py::arg("T"));
    m.def("max_predictor_growth", &max_predictor_growth, py::arg("K_alpha"), py::arg("r_alpha"), py::arg("r_m"));

    m.def("_bound_json", &bound_json);
    m.def("_check_json", &check_json, py::call_guard<py::gil_scoped_release>());
    m.def("_experiment_json", &experiment_json);
    m.def("_run_config", &run_config);
    m.def("check_names", &check_names);
    m.def("format_double", &format_double);
}
