#pragma once

#include <stdexcept>
#include <string>

namespace dpmrm {

// Malformed or inconsistent user-supplied data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or usage (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated internal bookkeeping contract (CLI exit code 3).
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace dpmrm
