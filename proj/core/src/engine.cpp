#include "nvis/engine.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace nvis {

namespace {

Tensor apply_activation(Tensor t, Activation a) {
  switch (a) {
    case Activation::kNone: return t;
    case Activation::kRelu: return relu(t);
    case Activation::kSoftmax: return softmax(t);
  }
  return t;
}

const LayerParams& params_for(const Model& model, std::size_t layer) {
  const auto it = model.weights.find(layer);
  if (it == model.weights.end()) {
    throw Error(ErrorKind::kInvalidInput,
                "layer " + std::to_string(layer) + " has no weights");
  }
  return it->second;
}

// One layer, no shape bookkeeping beyond what the kernels check.
Tensor apply_layer(const Model& model, const Tensor& x, std::size_t index) {
  const LayerSpec& spec = model.layers[index];
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
    const auto& p = params_for(model, index);
    const ConvParams cp{static_cast<std::size_t>(c->stride), c->padding};
    return apply_activation(conv2d(x, p.weights, p.bias, cp), c->activation);
  }
  if (const auto* m = std::get_if<MaxPool2DSpec>(&spec)) {
    return maxpool2d(x, static_cast<std::size_t>(m->pool_h),
                     static_cast<std::size_t>(m->pool_w),
                     static_cast<std::size_t>(m->stride));
  }
  if (std::holds_alternative<FlattenSpec>(spec)) {
    return x.reshaped({x.size()});
  }
  const auto& d = std::get<DenseSpec>(spec);
  const auto& p = params_for(model, index);
  return apply_activation(dense(x, p.weights, p.bias), d.activation);
}

void check_layer_input(const Shape& expected, const Tensor& x,
                       std::size_t index) {
  if (x.shape() != expected) {
    throw Error(ErrorKind::kInvalidInput,
                "layer " + std::to_string(index) + " expects input " +
                    shape_to_string(expected) + ", got " +
                    shape_to_string(x.shape()));
  }
}

InferenceTrace finish_trace(const Model& model, std::vector<Tensor> per_layer,
                            FreezeConfig freeze) {
  InferenceTrace trace;
  trace.final_probs = class_probabilities(model, per_layer.back());
  trace.predicted_class = argmax(trace.final_probs);
  trace.per_layer = std::move(per_layer);
  trace.freeze = std::move(freeze);
  return trace;
}

}  // namespace

bool FreezeConfig::is_frozen(std::size_t layer, std::size_t filter) const {
  const auto it = entries.find(layer);
  return it != entries.end() && it->second.contains(filter);
}

void FreezeConfig::validate_against(
    const std::vector<LayerInfo>& structure) const {
  for (const auto& [layer, filters] : entries) {
    if (layer >= structure.size()) {
      throw Error(ErrorKind::kInvalidConfig,
                  "freeze refers to layer " + std::to_string(layer) +
                      " but the model has " +
                      std::to_string(structure.size()) + " layers");
    }
    const auto& info = structure[layer];
    if (info.kind != "conv2d") {
      throw Error(ErrorKind::kInvalidConfig,
                  "layer " + std::to_string(layer) + " is " + info.kind +
                      "; only conv2d filters can be frozen");
    }
    if (!filters.empty() && *filters.rbegin() >= info.filter_count) {
      throw Error(ErrorKind::kInvalidConfig,
                  "filter " + std::to_string(*filters.rbegin()) +
                      " out of range for layer " + std::to_string(layer) +
                      " with " + std::to_string(info.filter_count) +
                      " filters");
    }
  }
}

FreezeConfig FreezeConfig::from_json(std::string_view document) {
  using nlohmann::json;
  const auto fail = [](const std::string& what) -> void {
    throw Error(ErrorKind::kInvalidConfig, "freeze config: " + what);
  };
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kInvalidConfig,
                std::string("freeze config is not valid JSON: ") + e.what());
  }
  FreezeConfig config;
  if (!root.is_object() || !root.contains("freezes") ||
      !root["freezes"].is_array()) {
    fail("expected {\"freezes\": [...]}");
  }
  const auto& freezes = root["freezes"];
  for (std::size_t i = 0; i < freezes.size(); ++i) {
    const auto& f = freezes[i];
    const std::string where = "freezes[" + std::to_string(i) + "]";
    if (!f.is_object() || !f.contains("layer") || !f.contains("filters") ||
        !f["layer"].is_number_unsigned() || !f["filters"].is_array()) {
      fail(where + " needs a non-negative \"layer\" and a \"filters\" array");
    }
    const auto layer = f["layer"].get<std::size_t>();
    if (config.entries.contains(layer)) {
      fail(where + " repeats layer " + std::to_string(layer));
    }
    std::set<std::size_t> filters;
    std::size_t prev = 0;
    for (std::size_t j = 0; j < f["filters"].size(); ++j) {
      const auto& k = f["filters"][j];
      if (!k.is_number_unsigned()) fail(where + ".filters holds a non-index");
      const auto idx = k.get<std::size_t>();
      if (j > 0 && idx <= prev) {
        fail(where + ".filters must be ascending and duplicate-free");
      }
      prev = idx;
      filters.insert(idx);
    }
    if (!filters.empty()) config.entries.emplace(layer, std::move(filters));
  }
  return config;
}

std::string FreezeConfig::to_json() const {
  nlohmann::ordered_json freezes = nlohmann::ordered_json::array();
  for (const auto& [layer, filters] : entries) {
    if (filters.empty()) continue;
    nlohmann::ordered_json f;
    f["layer"] = layer;
    f["filters"] = filters;
    freezes.push_back(std::move(f));
  }
  nlohmann::ordered_json root;
  root["freezes"] = std::move(freezes);
  return root.dump();
}

void check_input(const Model& model, const Tensor& input) {
  if (input.shape() != model.input_shape) {
    throw Error(ErrorKind::kInvalidInput,
                "input shape " + shape_to_string(input.shape()) +
                    " does not match model input " +
                    shape_to_string(model.input_shape));
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    const float v = input[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorKind::kInvalidInput,
                  "input element " + std::to_string(i) + " = " +
                      std::to_string(v) + " outside [0, 1]");
    }
  }
}

std::size_t argmax(const Tensor& t) {
  const auto v = t.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) -
                                  v.begin());
}

Tensor class_probabilities(const Model& model, const Tensor& final_output) {
  if (activation_of(model.layers.back()) == Activation::kSoftmax) {
    return final_output;
  }
  return softmax(final_output);
}

Tensor inner_output(const Model& model, const Tensor& prev_activation,
                    std::size_t layer_index) {
  if (layer_index >= model.layers.size()) {
    throw Error(ErrorKind::kRange, "layer index " + std::to_string(layer_index) +
                                       " out of range for " +
                                       std::to_string(model.layers.size()) +
                                       " layers");
  }
  const auto shapes = infer_shapes(model);
  const Shape& expected =
      layer_index == 0 ? model.input_shape : shapes[layer_index - 1];
  check_layer_input(expected, prev_activation, layer_index);
  return apply_layer(model, prev_activation, layer_index);
}

Tensor prepare_input(const Tensor& output, const FreezeConfig& config,
                     const std::vector<LayerInfo>& structure,
                     std::size_t layer_index) {
  const auto it = config.entries.find(layer_index);
  if (it == config.entries.end() || it->second.empty()) return output;
  if (layer_index >= structure.size() ||
      structure[layer_index].kind != "conv2d") {
    throw Error(ErrorKind::kInvalidConfig,
                "layer " + std::to_string(layer_index) +
                    " has no filters to freeze");
  }
  const std::size_t channels = output.rank() == 3 ? output.dim(0) : 0;
  Tensor mutated = output;
  for (std::size_t k : it->second) {
    if (k >= channels) {
      throw Error(ErrorKind::kInvalidConfig,
                  "filter " + std::to_string(k) + " out of range for layer " +
                      std::to_string(layer_index) + " with " +
                      std::to_string(channels) + " channels");
    }
    const std::size_t plane = output.dim(1) * output.dim(2);
    auto values = mutated.values().subspan(k * plane, plane);
    std::fill(values.begin(), values.end(), 0.0f);
  }
  return mutated;
}

InferenceTrace forward(const Model& model, const Tensor& input) {
  require_valid(model);
  check_input(model, input);
  std::vector<Tensor> per_layer;
  per_layer.reserve(model.layers.size());
  const Tensor* x = &input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    per_layer.push_back(apply_layer(model, *x, i));
    x = &per_layer.back();
  }
  return finish_trace(model, std::move(per_layer), FreezeConfig{});
}

InferenceTrace mutate_output(const Model& model, const Tensor& input,
                             const FreezeConfig& config) {
  require_valid(model);
  const auto structure = extract_layers(model);
  config.validate_against(structure);
  check_input(model, input);

  std::vector<Tensor> result;
  result.reserve(structure.size());
  Tensor x = input;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    Tensor output = apply_layer(model, x, i);
    if (!config.empty()) output = prepare_input(output, config, structure, i);
    check_layer_input(structure[i].output_shape, output, i);
    result.push_back(output);
    x = std::move(output);
  }
  return finish_trace(model, std::move(result), config);
}

Prediction predict(const Model& model, const Tensor& input) {
  auto trace = forward(model, input);
  return {trace.predicted_class, std::move(trace.final_probs)};
}

}  // namespace nvis
