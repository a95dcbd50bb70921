#pragma once

#include <string>
#include <string_view>

#include "nvis/model.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

enum class AttackAlgorithm { kFgsm, kBim };

std::string_view to_string(AttackAlgorithm a);

// Untargeted L-infinity attack request. `steps` and `step_size` are used by
// BIM only.
struct AttackSpec {
  AttackAlgorithm algorithm = AttackAlgorithm::kFgsm;
  float epsilon = 0.0f;
  int steps = 1;
  float step_size = 0.0f;
  std::size_t true_label = 0;

  // Request-level checks: epsilon in (0, 1], and for BIM steps >= 1 and
  // step_size > 0. Throws kInvalidConfig; kRange for a label outside
  // [0, classes).
  void validate(std::size_t classes) const;

  // {"algorithm":"fgsm"|"bim","epsilon":e,"steps":n,"step_size":s,
  //  "true_label":l}; steps/step_size may be omitted for fgsm.
  static AttackSpec from_json(std::string_view document);
  std::string to_json() const;

  bool operator==(const AttackSpec&) const = default;
};

// x' = clamp01(x + epsilon * sign(grad)), sign(0) = 0. The step is
// nudged toward x when float rounding would overshoot, so |x' - x| never
// exceeds epsilon.
Tensor fgsm(const Model& model, const Tensor& input, const AttackSpec& spec);

// `steps` rounds of x <- clamp01(project_eps(x + step_size * sign(grad))).
Tensor bim(const Model& model, const Tensor& input, const AttackSpec& spec);

// Dispatches on spec.algorithm after spec.validate().
Tensor run_attack(const Model& model, const Tensor& input,
                  const AttackSpec& spec);

}  // namespace nvis
