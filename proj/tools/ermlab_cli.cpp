// Command-line front end: run <config>, check <name>, bound <theorem>.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ermlab/errors.hpp"
#include "ermlab/io.hpp"

using namespace ermlab;

namespace {

int cmd_run(const std::string& config_path) {
    RunConfig config;
    try {
        config = load_config(config_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    const RunOutcome out = run(config);
    for (const auto& f : out.failures) std::cerr << "FAIL " << f << "\n";
    std::cout << "wrote results to " << out.output_dir << "\n";
    return out.exit_code;
}

int cmd_check(const std::string& name, const CheckOptions& options) {
    const InequalityCheck c = run_named_check(name, options);
    std::cout << dump_json(to_json(c));
    return c.passed ? kExitOk : kExitCheckFailed;
}

int cmd_bound(const std::string& theorem_name, const std::string& constants_path) {
    Theorem theorem;
    try {
        theorem = theorem_from_string(theorem_name);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    std::string text;
    try {
        text = read_file(constants_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    BoundCertificate cert;
    try {
        cert = theorem == Theorem::benchmark ? benchmark_certificate(parse_benchmark_inputs(text))
                                             : certificate(theorem, parse_bound_inputs(text));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    std::cout << dump_json(to_json(cert));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Least-squares oracle-inequality laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run a replication study described by a JSON config");
    run_cmd->add_option("config", config_path, "Path to the JSON config")->required();

    std::string check_name;
    std::int64_t draws = 0;
    std::uint64_t seed = kDefaultCheckSeed;
    std::vector<std::string> params;
    auto* check_cmd = app.add_subcommand("check", "Monte Carlo falsification of one inequality");
    check_cmd->add_option("name", check_name, "Check name")->required();
    auto* draws_opt = check_cmd->add_option("--draws", draws, "Number of draws or trials");
    auto* seed_opt = check_cmd->add_option("--seed", seed, "RNG seed");
    check_cmd->add_option("--param", params, "Override a parameter, key=value (repeatable)");
    check_cmd->add_flag_callback("--list", [] {
        for (const auto& n : check_names()) std::cout << n << "\n";
        std::exit(kExitOk);
    }, "List the available checks");

    std::string theorem_name;
    std::string constants_path;
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate a certificate from a constants file");
    bound_cmd->add_option("theorem", theorem_name, "thm31, thm41, thm51 or benchmark")->required();
    bound_cmd->add_option("--constants", constants_path, "JSON constants file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(config_path);
        if (*check_cmd) {
            CheckOptions options;
            if (*draws_opt) options.draws = draws;
            if (*seed_opt) options.seed = seed;
            for (const auto& kv : params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
                try {
                    options.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ConfigError("--param value in '" + kv + "' is not a number");
                }
            }
            return cmd_check(check_name, options);
        }
        if (*bound_cmd) return cmd_bound(theorem_name, constants_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
