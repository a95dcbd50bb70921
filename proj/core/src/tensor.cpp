#include "nvis/tensor.hpp"

#include <cmath>
#include <cstring>

#include "nvis/error.hpp"

namespace nvis {

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) {
    throw Error(ErrorKind::kInvalidShape, "tensor rank must be at least 1");
  }
  for (auto d : shape) {
    if (d == 0) {
      throw Error(ErrorKind::kInvalidShape,
                  "tensor dimensions must be positive, got " +
                      shape_to_string(shape));
    }
  }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor() : shape_{1}, data_(1, 0.0f) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (element_count(shape_) != data_.size()) {
    throw Error(ErrorKind::kInvalidShape,
                "shape " + shape_to_string(shape_) + " holds " +
                    std::to_string(element_count(shape_)) +
                    " elements but " + std::to_string(data_.size()) +
                    " values were given");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorKind::kInvalidInput,
                  "non-finite value at element " + std::to_string(i));
    }
  }
}

Tensor Tensor::filled(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  check_shape(shape);
  if (element_count(shape) != data_.size()) {
    throw Error(ErrorKind::kInvalidShape, "cannot reshape " +
                                              shape_to_string(shape_) +
                                              " to " + shape_to_string(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

std::span<const float> Tensor::channel(std::size_t c) const {
  if (rank() != 3 || c >= shape_[0]) {
    throw Error(ErrorKind::kRange, "channel " + std::to_string(c) +
                                       " out of range for shape " +
                                       shape_to_string(shape_));
  }
  const std::size_t plane = shape_[1] * shape_[2];
  return std::span<const float>(data_).subspan(c * plane, plane);
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(float)) == 0;
}

}  // namespace nvis
