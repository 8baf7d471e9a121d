#pragma once

#include <stdexcept>
#include <string>

namespace lerp {

// Error taxonomy used across the library. All carry a human-readable
// message naming the offending value (shape, line number, record id, ...).

// Incompatible tensor shapes or ranks.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value (even kernel width, window too large, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid data content (bad record, empty entity, unknown id, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external file (embedding table, dataset, checkpoint).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// API contract violation (non-scalar loss, node not on tape, ...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lerp
