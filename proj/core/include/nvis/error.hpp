#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nvis {

enum class ErrorKind {
  kInvalidShape,
  kUnsupportedConfiguration,
  kParse,
  kIntegrity,
  kValidation,
  kInvalidInput,
  kInvalidConfig,
  kRange,
  kUnsupportedModel,
  kIncomparableTraces,
  kNotFound,
  kIo,
};

// Stable snake_case name used in error documents ("invalid_shape", ...).
std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// One broken model invariant. `layer` is empty for model-level problems
// (input shape, empty layer list).
struct Violation {
  std::optional<std::size_t> layer;
  std::string message;

  std::string to_string() const;
  bool operator==(const Violation&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<Violation> violations_;
};

}  // namespace nvis
