#pragma once

#include "nvis/tensor.hpp"

namespace nvis {

enum class Padding { kValid, kSame };

struct ConvParams {
  std::size_t stride = 1;
  Padding padding = Padding::kValid;
};

// Leading (top/left) padding used by `same` convolution for a kernel of
// extent k. The odd remainder goes to the bottom/right edge.
inline std::size_t same_pad_before(std::size_t k) { return (k - 1) / 2; }

// Output extent of a convolution along one axis. Throws kInvalidShape when
// the kernel does not fit and kUnsupportedConfiguration for same+stride>1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                               const ConvParams& params);

// Output extent of valid pooling along one axis.
std::size_t pool_output_extent(std::size_t in, std::size_t pool,
                               std::size_t stride);

// Deterministic reference kernels. Every sum is accumulated in float in a
// fixed order (input channel, kernel row, kernel column ascending for conv;
// n ascending for dense) and the bias is added last.

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvParams& params);

Tensor maxpool2d(const Tensor& input, std::size_t pool_h, std::size_t pool_w,
                 std::size_t stride);

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor relu(const Tensor& input);

// Numerically stable softmax over a rank-1 tensor.
Tensor softmax(const Tensor& input);

// Comparison helpers. Norms accumulate in double and round once.
Tensor elementwise_sub_abs(const Tensor& a, const Tensor& b);
float l2_norm(const Tensor& t);
float max_abs(const Tensor& t);

// Cosine similarity clamped to [-1, 1]. Two zero vectors give 1.0, exactly
// one zero vector gives 0.0.
float cosine(const Tensor& a, const Tensor& b);

// Span forms used for per-channel metrics; lengths must match.
float l2_norm(std::span<const float> v);
float max_abs(std::span<const float> v);
float l2_distance(std::span<const float> a, std::span<const float> b);
float max_abs_difference(std::span<const float> a, std::span<const float> b);
float cosine(std::span<const float> a, std::span<const float> b);

}  // namespace nvis
