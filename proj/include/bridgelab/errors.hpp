#pragma once

#include <stdexcept>
#include <string>

namespace bridgelab {

// Validation problems: bad schedules, bad mixtures, bad conditions, bad
// configs. The CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidScheduleError : ValidationError {
    explicit InvalidScheduleError(const std::string& msg) : ValidationError(msg) {}
};

struct InvalidConditionError : ValidationError {
    explicit InvalidConditionError(const std::string& msg) : ValidationError(msg) {}
};

// Operation asked to run in a mode it does not support, for example a
// deterministic inversion on a stochastic schedule.
struct ModeMismatchError : ValidationError {
    explicit ModeMismatchError(const std::string& msg) : ValidationError(msg) {}
};

struct ConfigError : ValidationError {
    explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

// Numerical failures at run time: non-finite states, degenerate variances.
// The CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bridgelab
