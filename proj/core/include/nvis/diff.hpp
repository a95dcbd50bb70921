#pragma once

#include <vector>

#include "nvis/engine.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

struct ChannelDiff {
  std::size_t channel = 0;
  float l2 = 0.0f;
  float cosine = 1.0f;
  float max_abs = 0.0f;
};

// Comparison of two traces at one layer. Rank-1 layers count as a single
// channel.
struct DiffReport {
  std::size_t layer_index = 0;
  std::vector<ChannelDiff> per_channel;
  float aggregate_l2 = 0.0f;
  float aggregate_cosine = 1.0f;
  Tensor heatmap;  // |a - b| elementwise, shaped like the layer output
};

// Throws kIncomparableTraces when the traces do not share layer shapes and
// kRange for a bad layer index.
DiffReport compare_at_layer(const InferenceTrace& a, const InferenceTrace& b,
                            std::size_t layer_index);

// Same metrics on two bare activations of identical shape.
DiffReport compare_tensors(const Tensor& a, const Tensor& b,
                           std::size_t layer_index = 0);

// Top-k channels by l2, descending; ties resolved by lower channel index.
std::vector<std::size_t> rank_channels(const DiffReport& report, std::size_t k);

}  // namespace nvis
