#pragma once

#include <stdexcept>
#include <string>

namespace mamnet {

// Operator mistakes: bad config values, unknown keys, malformed flags.
// The CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problems with input data: missing files, unusable rows, empty sets,
// non-finite inputs. Exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown during computation: NaN loss, non-finite gradients.
// Exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mamnet
