#include "nvis/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"

namespace nvis {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kParse, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string child(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

std::string item(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return key == k; })) {
      parse_fail(where, "unknown field '" + key + "'");
    }
  }
}

// Layer integers may be zero or negative here; validate() reports those
// against the layer instead of failing the parse.
int get_int(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) parse_fail(child(where, key), "expected an integer");
  const auto n = v.get<std::int64_t>();
  if (n < INT32_MIN || n > INT32_MAX) parse_fail(child(where, key), "integer out of range");
  return static_cast<int>(n);
}

std::size_t get_index(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_unsigned()) {
    parse_fail(child(where, key), "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) parse_fail(child(where, key), "expected a string");
  return v.get<std::string>();
}

std::pair<int, int> get_pair(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  const std::string at = child(where, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer()) {
    parse_fail(at, "expected [height, width] integers");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

Activation parse_activation(const json& obj, const std::string& where) {
  const auto s = get_string(obj, "activation", where);
  if (s == "none") return Activation::kNone;
  if (s == "relu") return Activation::kRelu;
  if (s == "softmax") return Activation::kSoftmax;
  parse_fail(child(where, "activation"), "unknown activation '" + s + "'");
}

LayerSpec parse_layer(const json& l, const std::string& where) {
  if (!l.is_object()) parse_fail(where, "expected an object");
  const auto kind = get_string(l, "kind", where);
  if (kind == "conv2d") {
    reject_unknown_keys(l, {"kind", "out_channels", "kernel", "stride", "padding", "activation"},
                        where);
    Conv2DSpec s;
    s.out_channels = get_int(l, "out_channels", where);
    std::tie(s.kernel_h, s.kernel_w) = get_pair(l, "kernel", where);
    s.stride = get_int(l, "stride", where);
    const auto padding = get_string(l, "padding", where);
    if (padding == "valid") {
      s.padding = Padding::kValid;
    } else if (padding == "same") {
      s.padding = Padding::kSame;
    } else {
      parse_fail(child(where, "padding"), "unknown padding '" + padding + "'");
    }
    s.activation = parse_activation(l, where);
    return s;
  }
  if (kind == "maxpool2d") {
    reject_unknown_keys(l, {"kind", "pool", "stride"}, where);
    MaxPool2DSpec s;
    std::tie(s.pool_h, s.pool_w) = get_pair(l, "pool", where);
    s.stride = get_int(l, "stride", where);
    return s;
  }
  if (kind == "flatten") {
    reject_unknown_keys(l, {"kind"}, where);
    return FlattenSpec{};
  }
  if (kind == "dense") {
    reject_unknown_keys(l, {"kind", "out_features", "activation"}, where);
    DenseSpec s;
    s.out_features = get_int(l, "out_features", where);
    s.activation = parse_activation(l, where);
    return s;
  }
  parse_fail(child(where, "kind"), "unsupported layer kind '" + kind + "'");
}

float decode_le_float(std::span<const std::byte> blob, std::size_t element) {
  const std::size_t at = element * 4;
  const std::uint32_t bits = std::to_integer<std::uint32_t>(blob[at]) |
                             std::to_integer<std::uint32_t>(blob[at + 1]) << 8 |
                             std::to_integer<std::uint32_t>(blob[at + 2]) << 16 |
                             std::to_integer<std::uint32_t>(blob[at + 3]) << 24;
  return std::bit_cast<float>(bits);
}

void append_le_floats(std::vector<std::byte>& out, std::span<const float> values) {
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int shift = 0; shift < 32; shift += 8) {
      out.push_back(static_cast<std::byte>((bits >> shift) & 0xFFu));
    }
  }
}

Tensor decode_tensor(std::span<const std::byte> blob, std::size_t offset,
                     const Shape& shape, std::size_t layer, const char* what) {
  std::vector<float> values(element_count(shape));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = decode_le_float(blob, offset + i);
  }
  try {
    return Tensor(shape, std::move(values));
  } catch (const Error& e) {
    throw Error(ErrorKind::kIntegrity, "layer " + std::to_string(layer) + " " +
                                           what + ": " + e.what());
  }
}

struct WeightRef {
  std::size_t layer;
  std::size_t weight_offset;
  std::size_t bias_offset;
};

}  // namespace

Model parse_model(std::string_view manifest, std::span<const std::byte> blob) {
  json root;
  try {
    root = json::parse(manifest);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse,
                "manifest byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object()) parse_fail("manifest", "expected a JSON object");
  reject_unknown_keys(root, {"format_version", "name", "input_shape", "layers", "weights",
                             "total_elements"},
                      "manifest");

  const int version = get_int(root, "format_version", "manifest");
  if (version != kFormatVersion) {
    parse_fail("format_version", "unsupported version " + std::to_string(version));
  }

  Model model;
  model.name = get_string(root, "name", "manifest");

  const json& in = field(root, "input_shape", "manifest");
  if (!in.is_array() || in.size() != 3) parse_fail("input_shape", "expected [C,H,W]");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!in[i].is_number_unsigned()) {
      parse_fail(item("input_shape", i), "expected a non-negative integer");
    }
    model.input_shape.push_back(in[i].get<std::size_t>());
  }

  const json& layers = field(root, "layers", "manifest");
  if (!layers.is_array()) parse_fail("layers", "expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    model.layers.push_back(parse_layer(layers[i], item("layers", i)));
  }

  const std::size_t total = get_index(root, "total_elements", "manifest");
  if (blob.size() != total * 4) {
    throw Error(ErrorKind::kIntegrity,
                "weights blob holds " + std::to_string(blob.size()) +
                    " bytes, manifest declares " + std::to_string(total) +
                    " float32 elements (" + std::to_string(total * 4) + " bytes)");
  }

  const json& weights = field(root, "weights", "manifest");
  if (!weights.is_array()) parse_fail("weights", "expected an array");
  std::vector<WeightRef> refs;
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string where = item("weights", i);
    const json& w = weights[i];
    if (!w.is_object()) parse_fail(where, "expected an object");
    reject_unknown_keys(w, {"layer", "weight_offset", "bias_offset"}, where);
    WeightRef ref{get_index(w, "layer", where), get_index(w, "weight_offset", where),
                  get_index(w, "bias_offset", where)};
    if (!seen.insert(ref.layer).second) {
      parse_fail(child(where, "layer"),
                 "duplicate weights entry for layer " + std::to_string(ref.layer));
    }
    refs.push_back(ref);
  }

  // Structure must be sound before parameter sizes can be known.
  const auto shapes = infer_shapes(model);
  std::vector<Violation> violations;
  struct Range {
    std::size_t begin, end, layer;
  };
  std::vector<Range> ranges;
  for (const auto& ref : refs) {
    if (ref.layer >= model.layers.size() || !has_params(model.layers[ref.layer])) {
      violations.push_back({ref.layer, "weights entry for a layer without parameters"});
      continue;
    }
    const Shape& input = ref.layer == 0 ? model.input_shape : shapes[ref.layer - 1];
    const auto [ws, bs] = param_shapes(model.layers[ref.layer], input);
    const std::size_t wn = element_count(ws), bn = element_count(bs);
    for (const auto& [begin, n, what] :
         {std::tuple{ref.weight_offset, wn, "weights"}, std::tuple{ref.bias_offset, bn, "bias"}}) {
      if (begin > total || n > total - begin) {
        throw Error(ErrorKind::kIntegrity,
                    "layer " + std::to_string(ref.layer) + " " + what + " range [" +
                        std::to_string(begin) + ", " + std::to_string(begin + n) +
                        ") exceeds total_elements " + std::to_string(total));
      }
      ranges.push_back({begin, begin + n, ref.layer});
    }
    model.weights[ref.layer] = LayerParams{
        decode_tensor(blob, ref.weight_offset, ws, ref.layer, "weights"),
        decode_tensor(blob, ref.bias_offset, bs, ref.layer, "bias")};
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));

  std::sort(ranges.begin(), ranges.end(),
            [](const Range& a, const Range& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].begin < ranges[i - 1].end) {
      throw Error(ErrorKind::kIntegrity,
                  "layer " + std::to_string(ranges[i].layer) + " parameters overlap layer " +
                      std::to_string(ranges[i - 1].layer) + " at element " +
                      std::to_string(ranges[i].begin));
    }
  }

  require_valid(model);
  return model;
}

std::vector<std::byte> encode_float32_le(std::span<const float> values) {
  std::vector<std::byte> out;
  out.reserve(values.size() * 4);
  append_le_floats(out, values);
  return out;
}

std::vector<float> decode_float32_le(std::span<const std::byte> bytes) {
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorKind::kIntegrity,
                "float32 payload of " + std::to_string(bytes.size()) + " bytes");
  }
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode_le_float(bytes, i);
  return out;
}

SerializedModel serialize_model(const Model& model) {
  require_valid(model);
  ordered_json layers = ordered_json::array();
  for (const auto& spec : model.layers) {
    ordered_json l;
    l["kind"] = std::string(layer_kind(spec));
    if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
      l["out_channels"] = c->out_channels;
      l["kernel"] = {c->kernel_h, c->kernel_w};
      l["stride"] = c->stride;
      l["padding"] = std::string(to_string(c->padding));
      l["activation"] = std::string(to_string(c->activation));
    } else if (const auto* p = std::get_if<MaxPool2DSpec>(&spec)) {
      l["pool"] = {p->pool_h, p->pool_w};
      l["stride"] = p->stride;
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      l["out_features"] = d->out_features;
      l["activation"] = std::string(to_string(d->activation));
    }
    layers.push_back(std::move(l));
  }

  SerializedModel out;
  ordered_json refs = ordered_json::array();
  std::size_t cursor = 0;
  for (const auto& [index, params] : model.weights) {
    ordered_json r;
    r["layer"] = index;
    r["weight_offset"] = cursor;
    append_le_floats(out.weights_blob, params.weights.values());
    cursor += params.weights.size();
    r["bias_offset"] = cursor;
    append_le_floats(out.weights_blob, params.bias.values());
    cursor += params.bias.size();
    refs.push_back(std::move(r));
  }

  ordered_json root;
  root["format_version"] = kFormatVersion;
  root["name"] = model.name;
  root["input_shape"] = model.input_shape;
  root["layers"] = std::move(layers);
  root["weights"] = std::move(refs);
  root["total_elements"] = cursor;
  out.manifest = root.dump(2) + "\n";
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(),
                 [](char c) { return static_cast<std::byte>(c); });
  return out;
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

Model load_model_dir(const std::filesystem::path& dir) {
  const auto manifest = read_file_text(dir / kManifestFile);
  const auto blob = read_file_bytes(dir / kWeightsFile);
  return parse_model(manifest, blob);
}

void save_model_dir(const Model& model, const std::filesystem::path& dir) {
  const auto serialized = serialize_model(model);
  std::filesystem::create_directories(dir);
  write_file_bytes(dir / kManifestFile, as_bytes(serialized.manifest));
  write_file_bytes(dir / kWeightsFile, serialized.weights_blob);
}

}  // namespace nvis
