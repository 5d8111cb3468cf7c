#pragma once

#include <stdexcept>

namespace grc {

// Invalid configuration or construction input (bad gains, malformed scenario).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure that valid inputs should never trigger.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace grc
