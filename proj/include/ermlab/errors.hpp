#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ermlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates one of the modelling assumptions (moments, mixing,
/// predictor growth, eigenvalues, ...). `assumption()` names it, e.g.
/// "Assumption 3".
class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string assumption, const std::string& what)
        : Error(assumption + ": " + what), assumption_(std::move(assumption)) {}

    const std::string& assumption() const noexcept { return assumption_; }

private:
    std::string assumption_;
};

/// Plain precondition failure (dimension mismatch, out-of-range argument).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The least-squares design is numerically rank deficient.
class SingularDesign : public Error {
public:
    SingularDesign(std::uint64_t seed, double condition)
        : Error("rank-deficient design (condition number " + std::to_string(condition) +
                ") for sample seed " + std::to_string(seed)),
          seed_(seed),
          condition_(condition) {}

    std::uint64_t seed() const noexcept { return seed_; }
    double condition() const noexcept { return condition_; }

private:
    std::uint64_t seed_;
    double condition_;
};

/// A usability condition of an inequality does not hold, so the bound
/// cannot be evaluated at these arguments.
class BlockingCondition : public Error {
public:
    using Error::Error;
};

/// Configuration document is malformed or fails schema validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ermlab
