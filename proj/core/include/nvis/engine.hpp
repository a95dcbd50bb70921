#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nvis/model.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

// Which convolution filters are frozen, per layer index. A frozen filter's
// output channel is replaced by zeros before the next layer consumes it.
struct FreezeConfig {
  std::map<std::size_t, std::set<std::size_t>> entries;

  bool empty() const noexcept { return entries.empty(); }
  bool is_frozen(std::size_t layer, std::size_t filter) const;

  // Throws kInvalidConfig when a layer is not conv2d or a filter index is
  // out of range.
  void validate_against(const std::vector<LayerInfo>& structure) const;

  // {"freezes":[{"layer":i,"filters":[k0,k1,...]}]}; filter lists must be
  // ascending and duplicate-free. Layers with no filters are dropped.
  static FreezeConfig from_json(std::string_view document);
  std::string to_json() const;

  bool operator==(const FreezeConfig&) const = default;
};

// Post-activation (and post-freeze) output of every layer for one input.
struct InferenceTrace {
  std::vector<Tensor> per_layer;
  Tensor final_probs;
  std::size_t predicted_class = 0;
  FreezeConfig freeze;
};

// Throws kInvalidInput unless the shape matches the model input and every
// value lies in [0, 1].
void check_input(const Model& model, const Tensor& input);

// Index of the largest element; ties go to the lowest index.
std::size_t argmax(const Tensor& t);

// Class probabilities for a final-layer output: the output itself for a
// softmax head, otherwise softmax of it.
Tensor class_probabilities(const Model& model, const Tensor& final_output);

// Applies layer `layer_index` (affine + activation, pooling or flatten) to
// the activation that feeds it.
Tensor inner_output(const Model& model, const Tensor& prev_activation,
                    std::size_t layer_index);

// Zeroes the frozen channels of a conv layer's output; other layers pass
// through untouched.
Tensor prepare_input(const Tensor& output, const FreezeConfig& config,
                     const std::vector<LayerInfo>& structure,
                     std::size_t layer_index);

// Plain traced forward pass, no mutation.
InferenceTrace forward(const Model& model, const Tensor& input);

// Traced forward pass with frozen filters. The trace stores exactly what
// the downstream layers consumed.
InferenceTrace mutate_output(const Model& model, const Tensor& input,
                             const FreezeConfig& config);

struct Prediction {
  std::size_t label = 0;
  Tensor probs;
};

Prediction predict(const Model& model, const Tensor& input);

}  // namespace nvis
