#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nvis/diff.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, one byte per pixel

  bool operator==(const GrayImage&) const = default;
};

// Per-channel min-max normalization to [0, 255], rounding half up. A
// constant channel renders as mid-gray (128). Rank-3 tensors render one
// [H, W] channel, rank-2 tensors render whole (channel 0), rank-1 tensors
// render as a 1xN strip (channel 0). Throws kRange for a bad channel.
GrayImage render_feature_map(const Tensor& t, std::size_t channel);

GrayImage render_heatmap(const DiffReport& report, std::size_t channel);

// 8-bit grayscale PNG, no alpha.
std::vector<std::byte> encode_png(const GrayImage& image);

// Decodes a PNG into a [C, H, W] tensor scaled by 1/255: C = 1 for
// grayscale sources, C = 3 for color. Alpha is composited onto black.
// Throws kInvalidInput for undecodable data.
Tensor decode_png(std::span<const std::byte> bytes);

}  // namespace nvis
