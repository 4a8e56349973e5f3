#pragma once

#include <stdexcept>
#include <string>

namespace mfmlmc {

/// Invalid model, problem or algorithm configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Weight sum of zero (or negative, where a positive normaliser is needed).
class DegenerateWeightsError : public std::runtime_error {
public:
    explicit DegenerateWeightsError(const std::string& what, int level = 0)
        : std::runtime_error(what), level_(level) {}
    /// Level at which the degeneracy occurred; 0 when not level-specific.
    [[nodiscard]] int level() const { return level_; }

private:
    int level_;
};

/// Rejection sampler exceeded its attempt budget.
class AcceptanceRateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sample allocation impossible from the supplied level statistics.
class AllocationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Continuation-probability optimisation has no useful solution (R_0 <= 0).
class ApproximationUselessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mfmlmc
