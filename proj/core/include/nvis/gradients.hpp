#pragma once

#include "nvis/model.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

inline constexpr float kProbabilityFloor = 1e-12f;

// -ln(max(probs[label], 1e-12)). Throws kRange for a bad label.
float cross_entropy(const Tensor& probs, std::size_t label);

struct LossGradient {
  float loss = 0.0f;
  Tensor probs;
  Tensor gradient;  // d loss / d input, shaped like the input
};

// Reverse-mode pass for the cross-entropy of the softmax head against
// `label`. Softmax and cross-entropy are fused (logit gradient is
// probs - onehot). ReLU has subgradient 0 at exactly 0; max-pooling routes
// to the first maximal element of each window in row-major order.
// Throws kUnsupportedModel when the final layer is not a softmax head.
LossGradient loss_and_gradient(const Model& model, const Tensor& input,
                               std::size_t label);

Tensor input_gradient(const Model& model, const Tensor& input,
                      std::size_t label);

// |input gradient| reduced over input channels by max; shape [H, W].
// Not normalized.
struct SaliencyMap {
  Tensor values;
};

SaliencyMap saliency(const Model& model, const Tensor& input,
                     std::size_t label);

}  // namespace nvis
