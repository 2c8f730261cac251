#pragma once

#include <stdexcept>
#include <string>

namespace pfsgan {

// Violated precondition or shape/dimension mismatch on a public surface.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset file missing or unreadable.
struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or non-injective pairing manifest.
struct ManifestError : std::runtime_error {
  explicit ManifestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint version/dimension mismatch or corrupt archive.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite loss, matrix square root breakdown).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pfsgan
