#include "nvis/service.hpp"

#include <charconv>

#include "internal/json_types.hpp"
#include "nvis/attacks.hpp"
#include "nvis/diff.hpp"
#include "nvis/documents.hpp"
#include "nvis/engine.hpp"
#include "nvis/gradients.hpp"
#include "nvis/image.hpp"

namespace nvis {

using internal::Json;

namespace {

Json parse_body(std::string_view body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("request body is not valid JSON: ") +
                                              e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kInvalidInput, "request body must be an object");
  return j;
}

std::string require_string(const Json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorKind::kInvalidInput, std::string("missing string field \"") + key + "\"");
  }
  return body[key].get<std::string>();
}

std::size_t require_index(const Json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number_unsigned()) {
    throw Error(ErrorKind::kInvalidInput,
                std::string("missing non-negative integer field \"") + key + "\"");
  }
  return body[key].get<std::size_t>();
}

FreezeConfig optional_freeze(const Json& body) {
  if (!body.contains("freeze") || body["freeze"].is_null()) return {};
  return FreezeConfig::from_json(body["freeze"].dump());
}

void require_model_input_shape(const Model& model, const Tensor& t) {
  if (t.shape() != model.input_shape) {
    throw Error(ErrorKind::kInvalidShape,
                "input shape " + shape_to_string(t.shape()) + " does not match model input " +
                    shape_to_string(model.input_shape) + " (inputs are never resampled)");
  }
}

std::size_t channels_of(const Tensor& t) { return t.rank() == 3 ? t.dim(0) : 1; }

}  // namespace

Service::Service(std::filesystem::path data_dir) : registry_(std::move(data_dir)) {}

std::string Service::upload_model(std::string_view manifest, std::span<const std::byte> blob) {
  return model_entry_to_json(registry_.add_model(manifest, blob));
}

std::string Service::list_models() const {
  Json arr = Json::array();
  for (const auto& e : registry_.list_models()) arr.push_back(Json::parse(model_entry_to_json(e)));
  return arr.dump();
}

std::string Service::get_model(const std::string& model_id) const {
  return model_entry_to_json(registry_.get_model_entry(model_id));
}

std::string Service::upload_input(const std::string& model_id, std::string_view content_type,
                                  std::span<const std::byte> body) {
  const auto model = registry_.get_model(model_id);
  Tensor pixels;
  if (content_type.starts_with("image/png")) {
    pixels = decode_png(body);
  } else {
    pixels = tensor_from_document(
        std::string_view(reinterpret_cast<const char*>(body.data()), body.size()));
  }
  require_model_input_shape(*model, pixels);
  return input_entry_to_json(registry_.add_input(model_id, pixels, InputSource::kUpload));
}

std::string Service::list_inputs(const std::string& model_id) const {
  Json arr = Json::array();
  for (const auto& e : registry_.list_inputs(model_id)) {
    arr.push_back(Json::parse(input_entry_to_json(e)));
  }
  return arr.dump();
}

std::string Service::get_input(const std::string& model_id, const std::string& input_id) {
  const auto tensor = registry_.get_input(model_id, input_id);
  Json doc = Json::parse(input_entry_to_json(registry_.get_input_entry(input_id)));
  doc["data"] = tensor->data();
  Json renders = Json::array();
  for (std::size_t c = 0; c < channels_of(*tensor); ++c) {
    renders.push_back(registry_.put_render(render_feature_map(*tensor, c)));
  }
  doc["renders"] = std::move(renders);
  return doc.dump();
}

std::string Service::sketch_input(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  if (!j.contains("pixels") || !j["pixels"].is_array()) {
    throw Error(ErrorKind::kInvalidInput, "missing \"pixels\" array");
  }
  const std::size_t expected = element_count(model->input_shape);
  if (j["pixels"].size() != expected) {
    throw Error(ErrorKind::kInvalidShape,
                "sketch has " + std::to_string(j["pixels"].size()) + " pixels, model input " +
                    shape_to_string(model->input_shape) + " needs " + std::to_string(expected));
  }
  std::vector<float> data;
  data.reserve(expected);
  for (const auto& v : j["pixels"]) {
    if (!v.is_number()) throw Error(ErrorKind::kInvalidInput, "pixels must be numbers");
    data.push_back(v.get<float>());
  }
  const Tensor pixels(model->input_shape, std::move(data));
  return input_entry_to_json(registry_.add_input(model_id, pixels, InputSource::kSketch));
}

std::string Service::predict(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  const auto input_id = require_string(j, "input_id");
  const auto input = registry_.get_input(model_id, input_id);
  const auto p = nvis::predict(*model, *input);
  Json out;
  out["model_id"] = model_id;
  out["input_id"] = input_id;
  out["predicted_class"] = p.label;
  out["probs"] = p.probs.data();
  return out.dump();
}

std::string Service::trace(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  const auto input_id = require_string(j, "input_id");
  const auto input = registry_.get_input(model_id, input_id);
  const FreezeConfig freeze = optional_freeze(j);
  const auto trace = mutate_output(*model, *input, freeze);
  const RenderSink sink = [this](std::size_t, std::size_t, const GrayImage& image) {
    return registry_.put_render(image);
  };
  return trace_to_document(*model, trace, sink,
                           {{"model_id", model_id}, {"input_id", input_id}});
}

std::string Service::compare(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  const auto id_a = require_string(j, "input_a");
  const auto id_b = require_string(j, "input_b");
  const auto layer = require_index(j, "layer_index");
  const FreezeConfig freeze = optional_freeze(j);
  const auto trace_a = mutate_output(*model, *registry_.get_input(model_id, id_a), freeze);
  const auto trace_b = mutate_output(*model, *registry_.get_input(model_id, id_b), freeze);
  const auto report = compare_at_layer(trace_a, trace_b, layer);
  const RenderSink sink = [this](std::size_t, std::size_t, const GrayImage& image) {
    return registry_.put_render(image);
  };
  Json doc = Json::parse(diff_to_document(
      report, sink, {{"model_id", model_id}, {"input_a", id_a}, {"input_b", id_b}}));
  doc["freeze"] = Json::parse(freeze.to_json());
  for (const auto& [key, trace] : {std::pair{"a_renders", &trace_a}, std::pair{"b_renders", &trace_b}}) {
    Json renders = Json::array();
    const Tensor& t = trace->per_layer[layer];
    for (std::size_t c = 0; c < channels_of(t); ++c) {
      renders.push_back(registry_.put_render(render_feature_map(t, c)));
    }
    doc[key] = std::move(renders);
  }
  doc["predicted_a"] = trace_a.predicted_class;
  doc["predicted_b"] = trace_b.predicted_class;
  return doc.dump();
}

std::string Service::attack(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  const auto input_id = require_string(j, "input_id");
  if (!j.contains("spec") || !j["spec"].is_object()) {
    throw Error(ErrorKind::kInvalidInput, "missing \"spec\" object");
  }
  const AttackSpec spec = AttackSpec::from_json(j["spec"].dump());
  const auto input = registry_.get_input(model_id, input_id);
  const Tensor adversarial = run_attack(*model, *input, spec);
  const auto entry =
      registry_.add_input(model_id, adversarial, InputSource::kAttack, input_id, spec);
  const auto p = nvis::predict(*model, adversarial);
  Json doc = Json::parse(input_entry_to_json(entry));
  doc["predicted_class"] = p.label;
  doc["probs"] = p.probs.data();
  return doc.dump();
}

std::string Service::saliency(const std::string& model_id, std::string_view body) {
  const auto model = registry_.get_model(model_id);
  const Json j = parse_body(body);
  const auto input_id = require_string(j, "input_id");
  const auto label = require_index(j, "label");
  const auto input = registry_.get_input(model_id, input_id);
  const SaliencyMap map = nvis::saliency(*model, *input, label);
  Json doc;
  doc["model_id"] = model_id;
  doc["input_id"] = input_id;
  doc["label"] = label;
  doc["shape"] = map.values.shape();
  doc["values"] = map.values.data();
  doc["render_id"] = registry_.put_render(render_feature_map(map.values, 0));
  return doc.dump();
}

std::vector<std::byte> Service::render(const std::string& render_id) const {
  auto png = registry_.get_render(render_id);
  if (!png) throw Error(ErrorKind::kNotFound, "render '" + render_id + "' not found");
  return std::move(*png);
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kUnsupportedModel: return 422;
    case ErrorKind::kIo: return 500;
    default: return 400;
  }
}

ServerOptions parse_address(std::string_view address) {
  ServerOptions options;
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::kInvalidInput, "address must be host:port, got '" +
                                              std::string(address) + "'");
  }
  options.host = std::string(address.substr(0, colon));
  const auto port = address.substr(colon + 1);
  int value = -1;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value < 0 || value > 65535) {
    throw Error(ErrorKind::kInvalidInput, "bad port in address '" + std::string(address) + "'");
  }
  options.port = value;
  if (options.host.empty()) options.host = "0.0.0.0";
  return options;
}

}  // namespace nvis
