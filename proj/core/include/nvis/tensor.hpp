#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nvis {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major float32 array. Layout for feature maps is [C,H,W],
// convolution weights [Cout,Cin,Kh,Kw], dense weights [M,N].
class Tensor {
 public:
  // Rank-1 tensor holding a single zero; exists so Tensor is regular.
  Tensor();

  // Zero-filled tensor. Throws kInvalidShape for rank 0 or a zero dimension.
  explicit Tensor(Shape shape);

  // Throws kInvalidShape when the data length disagrees with the shape and
  // kInvalidInput when any value is NaN or infinite.
  Tensor(Shape shape, std::vector<float> data);

  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  float at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  // Same data, new shape; the element count must match.
  Tensor reshaped(Shape shape) const;

  // Channel c of a rank-3 tensor as a contiguous view.
  std::span<const float> channel(std::size_t c) const;

  // Shape equality plus bitwise equality of every element.
  bool bitwise_equal(const Tensor& other) const;

  // Value equality (0.0 == -0.0).
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace nvis
