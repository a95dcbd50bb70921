#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nvis/error.hpp"
#include "nvis/ops.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

enum class Activation { kNone, kRelu, kSoftmax };

// Integer fields are signed so a parsed-but-invalid value (0, -3) survives
// long enough for validate() to report it against its layer.
struct Conv2DSpec {
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  Padding padding = Padding::kValid;
  Activation activation = Activation::kNone;
  bool operator==(const Conv2DSpec&) const = default;
};

struct MaxPool2DSpec {
  int pool_h = 2;
  int pool_w = 2;
  int stride = 2;
  bool operator==(const MaxPool2DSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

struct DenseSpec {
  int out_features = 1;
  Activation activation = Activation::kNone;
  bool operator==(const DenseSpec&) const = default;
};

using LayerSpec = std::variant<Conv2DSpec, MaxPool2DSpec, FlattenSpec, DenseSpec>;

struct LayerParams {
  Tensor weights;
  Tensor bias;
  bool operator==(const LayerParams&) const = default;
};

// A sequential CNN classifier. Input sizes of layers are inferred from
// `input_shape`; only Conv2D and Dense layers own parameters.
struct Model {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::map<std::size_t, LayerParams> weights;

  // Structural equality; weights compare by value.
  bool operator==(const Model&) const = default;
};

struct LayerInfo {
  std::size_t index = 0;
  std::string kind;
  Shape output_shape;
  std::size_t filter_count = 0;  // out_channels for conv2d, otherwise 0
  bool operator==(const LayerInfo&) const = default;
};

std::string_view layer_kind(const LayerSpec& spec);
bool has_params(const LayerSpec& spec);
Activation activation_of(const LayerSpec& spec);

std::string_view to_string(Activation a);
std::string_view to_string(Padding p);

// Every violated model invariant, in layer order. Empty means valid.
std::vector<Violation> validate(const Model& model);

// Throws ValidationError carrying all violations.
void require_valid(const Model& model);

// Output shape of every layer. Throws ValidationError on the first layer
// whose input it cannot accept.
std::vector<Shape> infer_shapes(const Model& model);

// Expected (weights, bias) shapes of a parameterized layer given its input.
std::pair<Shape, Shape> param_shapes(const LayerSpec& spec,
                                     const Shape& input_shape);

std::vector<LayerInfo> extract_layers(const Model& model);

// Total float count stored in the weight blob for this model.
std::size_t parameter_count(const Model& model);

}  // namespace nvis
