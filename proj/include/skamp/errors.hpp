#pragma once

#include <stdexcept>
#include <string>

namespace skamp {

// Bad user input: dimensions, file contents, parameter ranges.
// CLI maps this family to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration: grid parameters, mode combinations, missing files.
struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

// Runtime numerical failure: overflow, NaN, loss of positivity.
// CLI maps this family to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative method hit its cap without meeting its tolerance.
struct ConvergenceError : NumericError {
    using NumericError::NumericError;
};

}  // namespace skamp
