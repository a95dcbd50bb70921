#include "nvis/model.hpp"

#include <optional>

namespace nvis {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t as_size(int v) { return static_cast<std::size_t>(v); }

class ShapeWalker {
 public:
  ShapeWalker(std::size_t index, std::vector<Violation>& out)
      : index_(index), out_(out) {}

  void fail(std::string message) {
    out_.push_back({index_, std::move(message)});
    ok_ = false;
  }

  void positive(int value, const char* field) {
    if (value < 1) {
      fail(std::string(field) + " must be >= 1, got " + std::to_string(value));
    }
  }

  bool ok() const { return ok_; }

 private:
  std::size_t index_;
  std::vector<Violation>& out_;
  bool ok_ = true;
};

void check_fields(const LayerSpec& spec, ShapeWalker& w) {
  std::visit(Overloaded{
                 [&](const Conv2DSpec& s) {
                   w.positive(s.out_channels, "out_channels");
                   w.positive(s.kernel_h, "kernel height");
                   w.positive(s.kernel_w, "kernel width");
                   w.positive(s.stride, "stride");
                   if (s.padding == Padding::kSame && s.stride > 1) {
                     w.fail("same padding requires stride 1, got stride " +
                            std::to_string(s.stride));
                   }
                 },
                 [&](const MaxPool2DSpec& s) {
                   w.positive(s.pool_h, "pool height");
                   w.positive(s.pool_w, "pool width");
                   w.positive(s.stride, "stride");
                 },
                 [](const FlattenSpec&) {},
                 [&](const DenseSpec& s) {
                   w.positive(s.out_features, "out_features");
                 },
             },
             spec);
}

// Output shape of one layer for the given input; records a violation and
// returns nullopt when the layer cannot accept it. Fields must already be
// positive.
std::optional<Shape> step_shape(const LayerSpec& spec, const Shape& in,
                                ShapeWalker& w) {
  const auto need_rank3 = [&]() {
    if (in.size() != 3) {
      w.fail(std::string(layer_kind(spec)) + " needs a [C,H,W] input, got " +
             shape_to_string(in));
      return false;
    }
    return true;
  };
  return std::visit(
      Overloaded{
          [&](const Conv2DSpec& s) -> std::optional<Shape> {
            if (!need_rank3()) return std::nullopt;
            const ConvParams params{as_size(s.stride), s.padding};
            try {
              return Shape{as_size(s.out_channels),
                           conv_output_extent(in[1], as_size(s.kernel_h), params),
                           conv_output_extent(in[2], as_size(s.kernel_w), params)};
            } catch (const Error&) {
              w.fail("kernel " + std::to_string(s.kernel_h) + "x" +
                     std::to_string(s.kernel_w) + " does not fit input " +
                     shape_to_string(in));
              return std::nullopt;
            }
          },
          [&](const MaxPool2DSpec& s) -> std::optional<Shape> {
            if (!need_rank3()) return std::nullopt;
            if (as_size(s.pool_h) > in[1] || as_size(s.pool_w) > in[2]) {
              w.fail("pool " + std::to_string(s.pool_h) + "x" +
                     std::to_string(s.pool_w) + " larger than input " +
                     shape_to_string(in));
              return std::nullopt;
            }
            return Shape{in[0],
                         pool_output_extent(in[1], as_size(s.pool_h), as_size(s.stride)),
                         pool_output_extent(in[2], as_size(s.pool_w), as_size(s.stride))};
          },
          [&](const FlattenSpec&) -> std::optional<Shape> {
            return Shape{element_count(in)};
          },
          [&](const DenseSpec& s) -> std::optional<Shape> {
            if (in.size() != 1) {
              w.fail("dense needs a rank-1 input, got " + shape_to_string(in) +
                     " (missing flatten?)");
              return std::nullopt;
            }
            return Shape{as_size(s.out_features)};
          },
      },
      spec);
}

bool input_shape_ok(const Shape& s) {
  if (s.size() != 3) return false;
  for (auto d : s) {
    if (d == 0) return false;
  }
  return true;
}

// Shared walk used by validate() and infer_shapes(). Returns per-layer
// output shapes, nullopt from the first layer that could not be inferred.
std::vector<std::optional<Shape>> walk_shapes(const Model& model,
                                              std::vector<Violation>& out) {
  std::vector<std::optional<Shape>> shapes(model.layers.size());
  if (!input_shape_ok(model.input_shape)) {
    out.push_back({std::nullopt, "input_shape must be [C,H,W] with positive "
                                 "dimensions, got " +
                                     shape_to_string(model.input_shape)});
  }
  if (model.layers.empty()) {
    out.push_back({std::nullopt, "model has no layers"});
  }
  std::optional<Shape> current;
  if (input_shape_ok(model.input_shape)) current = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& spec = model.layers[i];
    ShapeWalker w(i, out);
    check_fields(spec, w);
    if (activation_of(spec) == Activation::kSoftmax &&
        i + 1 != model.layers.size()) {
      w.fail("softmax activation is only allowed on the final layer");
    }
    if (current && w.ok()) {
      current = step_shape(spec, *current, w);
    } else {
      current.reset();
    }
    shapes[i] = current;
  }
  return shapes;
}

}  // namespace

std::string_view layer_kind(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const Conv2DSpec&) { return "conv2d"; },
                        [](const MaxPool2DSpec&) { return "maxpool2d"; },
                        [](const FlattenSpec&) { return "flatten"; },
                        [](const DenseSpec&) { return "dense"; },
                    },
                    spec);
}

bool has_params(const LayerSpec& spec) {
  return std::holds_alternative<Conv2DSpec>(spec) ||
         std::holds_alternative<DenseSpec>(spec);
}

Activation activation_of(const LayerSpec& spec) {
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) return c->activation;
  if (const auto* d = std::get_if<DenseSpec>(&spec)) return d->activation;
  return Activation::kNone;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
  }
  return "none";
}

std::string_view to_string(Padding p) {
  return p == Padding::kSame ? "same" : "valid";
}

std::pair<Shape, Shape> param_shapes(const LayerSpec& spec,
                                     const Shape& input_shape) {
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
    return {Shape{as_size(c->out_channels), input_shape.at(0),
                  as_size(c->kernel_h), as_size(c->kernel_w)},
            Shape{as_size(c->out_channels)}};
  }
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    return {Shape{as_size(d->out_features), input_shape.at(0)},
            Shape{as_size(d->out_features)}};
  }
  return {};
}

std::vector<Violation> validate(const Model& model) {
  std::vector<Violation> out;
  const auto shapes = walk_shapes(model, out);

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& spec = model.layers[i];
    const auto it = model.weights.find(i);
    if (!has_params(spec)) {
      if (it != model.weights.end()) {
        out.push_back({i, std::string(layer_kind(spec)) +
                              " layer must not carry weights"});
      }
      continue;
    }
    if (it == model.weights.end()) {
      out.push_back({i, "missing weights and bias"});
      continue;
    }
    const std::optional<Shape>& in =
        i == 0 ? (input_shape_ok(model.input_shape)
                      ? std::optional<Shape>(model.input_shape)
                      : std::nullopt)
               : shapes[i - 1];
    if (!in || !shapes[i]) continue;  // shape already reported
    const auto [ws, bs] = param_shapes(spec, *in);
    if (it->second.weights.shape() != ws) {
      out.push_back({i, "weights shape expected " + shape_to_string(ws) +
                            ", got " +
                            shape_to_string(it->second.weights.shape())});
    }
    if (it->second.bias.shape() != bs) {
      out.push_back({i, "bias shape expected " + shape_to_string(bs) +
                            ", got " +
                            shape_to_string(it->second.bias.shape())});
    }
  }
  for (const auto& [index, params] : model.weights) {
    if (index >= model.layers.size()) {
      out.push_back({index, "weights given for a layer that does not exist"});
    }
  }
  if (!shapes.empty() && shapes.back() && shapes.back()->size() != 1) {
    out.push_back({model.layers.size() - 1,
                   "final layer must produce rank-1 class scores, got " +
                       shape_to_string(*shapes.back())});
  }
  return out;
}

void require_valid(const Model& model) {
  auto violations = validate(model);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<Shape> infer_shapes(const Model& model) {
  std::vector<Violation> violations;
  const auto shapes = walk_shapes(model, violations);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  std::vector<Shape> out;
  out.reserve(shapes.size());
  for (const auto& s : shapes) out.push_back(*s);
  return out;
}

std::vector<LayerInfo> extract_layers(const Model& model) {
  const auto shapes = infer_shapes(model);
  std::vector<LayerInfo> out;
  out.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& spec = model.layers[i];
    std::size_t filters = 0;
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
      filters = as_size(c->out_channels);
    }
    out.push_back({i, std::string(layer_kind(spec)), shapes[i], filters});
  }
  return out;
}

std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  for (const auto& [index, p] : model.weights) n += p.weights.size() + p.bias.size();
  return n;
}

}  // namespace nvis
