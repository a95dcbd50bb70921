#include "nvis/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "internal/json_types.hpp"
#include "nvis/engine.hpp"
#include "nvis/gradients.hpp"

namespace nvis {

namespace {

float sign_of(float g) { return g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f); }

// x + direction * amount, pulled back by ulps until the realized distance
// is at most `amount`.
float bounded_step(float x, float direction, float amount) {
  if (direction == 0.0f) return x;
  float y = x + direction * amount;
  while (std::fabs(static_cast<double>(y) - static_cast<double>(x)) >
         static_cast<double>(amount)) {
    y = std::nextafter(y, x);
  }
  return y;
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

void require_algorithm(const AttackSpec& spec, AttackAlgorithm expected) {
  if (spec.algorithm != expected) {
    throw Error(ErrorKind::kInvalidConfig,
                "attack spec is for " + std::string(to_string(spec.algorithm)) +
                    ", not " + std::string(to_string(expected)));
  }
  if (!(spec.epsilon >= 0.0f) || !std::isfinite(spec.epsilon)) {
    throw Error(ErrorKind::kInvalidConfig, "epsilon must be non-negative");
  }
}

}  // namespace

std::string_view to_string(AttackAlgorithm a) {
  return a == AttackAlgorithm::kBim ? "bim" : "fgsm";
}

void AttackSpec::validate(std::size_t classes) const {
  if (!(epsilon > 0.0f && epsilon <= 1.0f)) {
    throw Error(ErrorKind::kInvalidConfig,
                "epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
  if (algorithm == AttackAlgorithm::kBim) {
    if (steps < 1) {
      throw Error(ErrorKind::kInvalidConfig, "bim needs steps >= 1");
    }
    if (!(step_size > 0.0f) || !std::isfinite(step_size)) {
      throw Error(ErrorKind::kInvalidConfig, "bim needs step_size > 0");
    }
  }
  if (true_label >= classes) {
    throw Error(ErrorKind::kRange, "true_label " + std::to_string(true_label) +
                                       " out of range for " +
                                       std::to_string(classes) + " classes");
  }
}

AttackSpec AttackSpec::from_json(std::string_view document) {
  using internal::Json;
  Json root;
  try {
    root = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kInvalidConfig,
                std::string("attack spec is not valid JSON: ") + e.what());
  }
  const auto fail = [](const std::string& what) {
    return Error(ErrorKind::kInvalidConfig, "attack spec: " + what);
  };
  if (!root.is_object()) throw fail("expected an object");
  AttackSpec spec;
  if (!root.contains("algorithm") || !root["algorithm"].is_string()) {
    throw fail("missing \"algorithm\"");
  }
  const auto alg = root["algorithm"].get<std::string>();
  if (alg == "fgsm") {
    spec.algorithm = AttackAlgorithm::kFgsm;
  } else if (alg == "bim") {
    spec.algorithm = AttackAlgorithm::kBim;
  } else {
    throw fail("unknown algorithm '" + alg + "'");
  }
  if (!root.contains("epsilon") || !root["epsilon"].is_number()) {
    throw fail("missing numeric \"epsilon\"");
  }
  spec.epsilon = root["epsilon"].get<float>();
  if (!root.contains("true_label") || !root["true_label"].is_number_unsigned()) {
    throw fail("missing non-negative \"true_label\"");
  }
  spec.true_label = root["true_label"].get<std::size_t>();
  if (root.contains("steps")) {
    if (!root["steps"].is_number_integer()) throw fail("\"steps\" must be an integer");
    spec.steps = root["steps"].get<int>();
  }
  if (root.contains("step_size")) {
    if (!root["step_size"].is_number()) throw fail("\"step_size\" must be a number");
    spec.step_size = root["step_size"].get<float>();
  }
  if (spec.algorithm == AttackAlgorithm::kBim &&
      (!root.contains("steps") || !root.contains("step_size"))) {
    throw fail("bim needs \"steps\" and \"step_size\"");
  }
  return spec;
}

std::string AttackSpec::to_json() const {
  internal::Json j;
  j["algorithm"] = std::string(to_string(algorithm));
  j["epsilon"] = epsilon;
  j["steps"] = steps;
  j["step_size"] = step_size;
  j["true_label"] = true_label;
  return j.dump();
}

Tensor fgsm(const Model& model, const Tensor& input, const AttackSpec& spec) {
  require_algorithm(spec, AttackAlgorithm::kFgsm);
  const Tensor grad = input_gradient(model, input, spec.true_label);
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp01(bounded_step(input[i], sign_of(grad[i]), spec.epsilon));
  }
  return out;
}

Tensor bim(const Model& model, const Tensor& input, const AttackSpec& spec) {
  require_algorithm(spec, AttackAlgorithm::kBim);
  Tensor lo = input, hi = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    lo[i] = bounded_step(input[i], -1.0f, spec.epsilon);
    hi[i] = bounded_step(input[i], 1.0f, spec.epsilon);
  }
  Tensor x = input;
  for (int step = 0; step < spec.steps; ++step) {
    const Tensor grad = input_gradient(model, x, spec.true_label);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const float moved = bounded_step(x[i], sign_of(grad[i]), spec.step_size);
      x[i] = clamp01(std::clamp(moved, lo[i], hi[i]));
    }
  }
  return x;
}

Tensor run_attack(const Model& model, const Tensor& input,
                  const AttackSpec& spec) {
  const auto structure = extract_layers(model);
  spec.validate(structure.back().output_shape.at(0));
  return spec.algorithm == AttackAlgorithm::kFgsm ? fgsm(model, input, spec)
                                                  : bim(model, input, spec);
}

}  // namespace nvis
