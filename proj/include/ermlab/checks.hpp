#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ermlab/concentration.hpp"

namespace ermlab {

/// Arguments of a named falsifier. Unset fields take the check's defaults;
/// `params` overrides individual numeric arguments (unknown names are errors).
struct CheckOptions {
    std::optional<std::int64_t> draws;
    std::optional<std::uint64_t> seed;
    std::map<std::string, double> params;
};

inline constexpr std::uint64_t kDefaultCheckSeed = 20240601;

/// Names accepted by run_named_check, in a stable order.
std::vector<std::string> check_names();

/// Default numeric arguments of a check (excluding draws and seed).
std::map<std::string, double> check_defaults(const std::string& name);

/// Throws ConfigError for unknown names or parameters.
InequalityCheck run_named_check(const std::string& name, const CheckOptions& options = {});

}  // namespace ermlab
