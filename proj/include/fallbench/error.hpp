#pragma once

#include <stdexcept>
#include <string>

namespace fallbench {

// Malformed input files or configuration.  The CLI maps this to exit code 2;
// everything else that escapes maps to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fallbench
