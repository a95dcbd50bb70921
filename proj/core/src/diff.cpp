#include "nvis/diff.hpp"

#include <algorithm>
#include <numeric>

#include "nvis/ops.hpp"

namespace nvis {

namespace {

std::size_t channel_count(const Tensor& t) { return t.rank() == 3 ? t.dim(0) : 1; }

std::span<const float> channel_view(const Tensor& t, std::size_t c) {
  if (t.rank() == 3) return t.channel(c);
  return t.values();
}

}  // namespace

DiffReport compare_tensors(const Tensor& a, const Tensor& b,
                           std::size_t layer_index) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::kIncomparableTraces,
                "activations at layer " + std::to_string(layer_index) +
                    " differ in shape: " + shape_to_string(a.shape()) + " vs " +
                    shape_to_string(b.shape()));
  }
  DiffReport report;
  report.layer_index = layer_index;
  const std::size_t channels = channel_count(a);
  report.per_channel.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto ca = channel_view(a, c);
    const auto cb = channel_view(b, c);
    report.per_channel.push_back({c, l2_distance(ca, cb), cosine(ca, cb),
                                  max_abs_difference(ca, cb)});
  }
  report.aggregate_l2 = l2_distance(a.values(), b.values());
  report.aggregate_cosine = cosine(a.values(), b.values());
  report.heatmap = elementwise_sub_abs(a, b);
  return report;
}

DiffReport compare_at_layer(const InferenceTrace& a, const InferenceTrace& b,
                            std::size_t layer_index) {
  if (a.per_layer.size() != b.per_layer.size()) {
    throw Error(ErrorKind::kIncomparableTraces,
                "traces have " + std::to_string(a.per_layer.size()) + " and " +
                    std::to_string(b.per_layer.size()) + " layers");
  }
  for (std::size_t i = 0; i < a.per_layer.size(); ++i) {
    if (a.per_layer[i].shape() != b.per_layer[i].shape()) {
      throw Error(ErrorKind::kIncomparableTraces,
                  "traces disagree on layer " + std::to_string(i) + " shape: " +
                      shape_to_string(a.per_layer[i].shape()) + " vs " +
                      shape_to_string(b.per_layer[i].shape()));
    }
  }
  if (layer_index >= a.per_layer.size()) {
    throw Error(ErrorKind::kRange, "layer index " + std::to_string(layer_index) +
                                       " out of range for " +
                                       std::to_string(a.per_layer.size()) +
                                       " layers");
  }
  return compare_tensors(a.per_layer[layer_index], b.per_layer[layer_index],
                         layer_index);
}

std::vector<std::size_t> rank_channels(const DiffReport& report, std::size_t k) {
  const std::size_t n = report.per_channel.size();
  if (k < 1 || k > n) {
    throw Error(ErrorKind::kRange, "k = " + std::to_string(k) +
                                       " must lie in [1, " + std::to_string(n) +
                                       "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return report.per_channel[x].l2 > report.per_channel[y].l2;
  });
  order.resize(k);
  return order;
}

}  // namespace nvis
