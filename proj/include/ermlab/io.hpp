#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ermlab/bounds.hpp"
#include "ermlab/checks.hpp"
#include "ermlab/mc_verify.hpp"

namespace ermlab {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitCheckFailed = 3, kExitIo = 4 };

/// Environment variable that overrides `output_dir` of a run config.
inline constexpr const char* kOutputDirEnv = "ERMLAB_OUTPUT_DIR";

struct CheckRequest {
    std::string name;
    CheckOptions options;
};

struct RunConfig {
    ExperimentPlan plan;
    std::string output_dir = "ermlab_output";
    std::vector<std::string> formats{"csv"};
    std::vector<CheckRequest> checks;
};

/// Strict parse: unknown or duplicate keys, wrong types and inadmissible
/// values throw ConfigError naming the key (and the assumption, if any).
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Strict parse of a constants file for the `bound` command.
BoundInputs parse_bound_inputs(std::string_view text);
BenchmarkInputs parse_benchmark_inputs(std::string_view text);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// JSON text with doubles in shortest round-trip form; non-finite doubles are
/// written as the strings "inf", "-inf" and "nan".
std::string dump_json(const Json& j);

Json to_json(const InequalityCheck& check);
Json to_json(const BoundCertificate& cert);
Json to_json(const CellResult& cell);
Json to_json(const SmallBallEstimate& est);
Json to_json(const ExperimentPlan& plan);

std::string report_json(const RunConfig& config, const ExperimentReport& report,
                        const std::vector<InequalityCheck>& checks);
std::string cells_csv(const ExperimentReport& report);

struct ParsedReport {
    ExperimentReport report;
    std::vector<InequalityCheck> checks;
};
ParsedReport parse_report_json(std::string_view text);
/// Recovers the columns present in cells.csv.
std::vector<CellResult> parse_cells_csv(std::string_view text);

std::string resolve_output_dir(const RunConfig& config);

struct RunOutcome {
    int exit_code = kExitOk;
    std::string output_dir;
    ExperimentReport report;
    std::vector<InequalityCheck> checks;
    std::vector<std::string> failures;  ///< human-readable reasons for exit 3
};

/// Runs the experiment and the requested checks and writes the selected
/// formats. Throws IoError when the output cannot be written.
RunOutcome run(const RunConfig& config);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace ermlab
