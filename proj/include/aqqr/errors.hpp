#pragma once

#include <stdexcept>
#include <string>

namespace aqqr {

/// File-system failures: missing or unwritable files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& message) : std::runtime_error(message) {}
};

/// Malformed or invalid data: schema violations, parse errors, bad
/// checkpoints.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace aqqr
