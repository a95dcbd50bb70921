#include "nvis/documents.hpp"

#include <algorithm>

#include "internal/json_types.hpp"
#include "nvis/model_io.hpp"

namespace nvis {

using internal::Json;

namespace {

Json with_header(const HeaderFields& header) {
  Json doc = Json::object();
  for (const auto& [key, value] : header) doc[key] = value;
  return doc;
}

Json layer_json(const LayerInfo& info) {
  Json j;
  j["index"] = info.index;
  j["kind"] = info.kind;
  j["output_shape"] = info.output_shape;
  j["filter_count"] = info.filter_count;
  return j;
}

std::size_t channels_of(const Tensor& t) { return t.rank() == 3 ? t.dim(0) : 1; }

}  // namespace

std::string tensor_to_document(const Tensor& t) {
  Json doc;
  doc["shape"] = t.shape();
  doc["data"] = t.data();
  return doc.dump();
}

Tensor tensor_from_document(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("tensor document is not valid JSON: ") +
                                              e.what());
  }
  if (!doc.is_object() || !doc.contains("shape") || !doc.contains("data") ||
      !doc["shape"].is_array() || !doc["data"].is_array()) {
    throw Error(ErrorKind::kInvalidInput,
                "tensor document needs \"shape\" and \"data\" arrays");
  }
  Shape shape;
  for (const auto& d : doc["shape"]) {
    if (!d.is_number_unsigned()) {
      throw Error(ErrorKind::kInvalidInput, "tensor shape entries must be non-negative integers");
    }
    shape.push_back(d.get<std::size_t>());
  }
  std::vector<float> data;
  data.reserve(doc["data"].size());
  for (const auto& v : doc["data"]) {
    if (!v.is_number()) {
      throw Error(ErrorKind::kInvalidInput, "tensor data entries must be numbers");
    }
    data.push_back(v.get<float>());
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor load_input(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  static constexpr unsigned char kPngMagic[] = {0x89, 'P', 'N', 'G'};
  const bool png = bytes.size() >= 4 &&
                   std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin(),
                              [](unsigned char m, std::byte b) {
                                return std::to_integer<unsigned char>(b) == m;
                              });
  if (png) return decode_png(bytes);
  return tensor_from_document(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                               bytes.size()));
}

std::string layers_to_document(const std::vector<LayerInfo>& layers) {
  Json arr = Json::array();
  for (const auto& info : layers) arr.push_back(layer_json(info));
  return arr.dump();
}

std::string trace_to_document(const Model& model, const InferenceTrace& trace,
                              const RenderSink& sink, const HeaderFields& header) {
  const auto structure = extract_layers(model);
  Json doc = with_header(header);
  doc["freeze"] = Json::parse(trace.freeze.to_json());
  Json layers = Json::array();
  for (std::size_t i = 0; i < trace.per_layer.size(); ++i) {
    Json l = layer_json(structure[i]);
    const auto frozen = trace.freeze.entries.find(i);
    l["frozen_filters"] = frozen == trace.freeze.entries.end()
                              ? Json::array()
                              : Json(frozen->second);
    if (sink) {
      Json renders = Json::array();
      const Tensor& t = trace.per_layer[i];
      for (std::size_t c = 0; c < channels_of(t); ++c) {
        renders.push_back(sink(i, c, render_feature_map(t, c)));
      }
      l["renders"] = std::move(renders);
    }
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  doc["probs"] = trace.final_probs.data();
  doc["predicted_class"] = trace.predicted_class;
  return doc.dump();
}

std::string diff_to_document(const DiffReport& report, const RenderSink& heatmap_sink,
                             const HeaderFields& header) {
  Json doc = with_header(header);
  doc["layer_index"] = report.layer_index;
  doc["aggregate_l2"] = report.aggregate_l2;
  doc["aggregate_cosine"] = report.aggregate_cosine;
  Json channels = Json::array();
  for (const auto& c : report.per_channel) {
    Json j;
    j["channel"] = c.channel;
    j["l2"] = c.l2;
    j["cosine"] = c.cosine;
    j["max_abs"] = c.max_abs;
    channels.push_back(std::move(j));
  }
  doc["per_channel"] = std::move(channels);
  doc["ranking"] = rank_channels(report, report.per_channel.size());
  doc["heatmap_shape"] = report.heatmap.shape();
  if (heatmap_sink) {
    Json renders = Json::array();
    for (std::size_t c = 0; c < report.per_channel.size(); ++c) {
      renders.push_back(heatmap_sink(report.layer_index, c, render_heatmap(report, c)));
    }
    doc["heatmap_renders"] = std::move(renders);
  }
  return doc.dump();
}

std::string error_to_document(std::string_view kind, std::string_view detail) {
  Json doc;
  doc["error"]["kind"] = std::string(kind);
  doc["error"]["detail"] = std::string(detail);
  return doc.dump();
}

std::string error_to_document(ErrorKind kind, std::string_view detail) {
  return error_to_document(to_string(kind), detail);
}

std::string error_to_document(const Error& error) {
  Json doc;
  doc["error"]["kind"] = std::string(to_string(error.kind()));
  doc["error"]["detail"] = error.what();
  if (const auto* v = dynamic_cast<const ValidationError*>(&error)) {
    Json violations = Json::array();
    for (const auto& violation : v->violations()) {
      Json j;
      if (violation.layer) {
        j["layer"] = *violation.layer;
      } else {
        j["layer"] = nullptr;
      }
      j["message"] = violation.message;
      violations.push_back(std::move(j));
    }
    doc["error"]["violations"] = std::move(violations);
  }
  return doc.dump();
}

}  // namespace nvis
