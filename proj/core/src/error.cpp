#include "nvis/error.hpp"

namespace nvis {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidShape: return "invalid_shape";
    case ErrorKind::kUnsupportedConfiguration: return "unsupported_configuration";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIntegrity: return "integrity";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kInvalidInput: return "invalid_input";
    case ErrorKind::kInvalidConfig: return "invalid_config";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kUnsupportedModel: return "unsupported_model";
    case ErrorKind::kIncomparableTraces: return "incomparable_traces";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

std::string Violation::to_string() const {
  if (layer) return "layer " + std::to_string(*layer) + ": " + message;
  return "model: " + message;
}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.to_string();
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorKind::kValidation, join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace nvis
