#include "nvis/registry.hpp"

#include <algorithm>

#include "content_store.hpp"
#include "internal/json_types.hpp"
#include "nvis/engine.hpp"
#include "nvis/model_io.hpp"

namespace nvis {

using internal::Json;
using service::atomic_write;
using service::bytes_of;
using service::content_id;

namespace fs = std::filesystem;

namespace {

constexpr const char* kEntryFile = "entry.json";
constexpr const char* kTensorFile = "tensor.bin";

Json layers_json(const std::vector<LayerInfo>& layers) {
  Json arr = Json::array();
  for (const auto& l : layers) {
    Json j;
    j["index"] = l.index;
    j["kind"] = l.kind;
    j["output_shape"] = l.output_shape;
    j["filter_count"] = l.filter_count;
    arr.push_back(std::move(j));
  }
  return arr;
}

InputSource parse_source(const std::string& s) {
  if (s == "upload") return InputSource::kUpload;
  if (s == "sketch") return InputSource::kSketch;
  if (s == "attack") return InputSource::kAttack;
  throw Error(ErrorKind::kParse, "unknown input source '" + s + "'");
}

std::string text_of(const std::vector<std::byte>& bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

[[noreturn]] void not_found(const std::string& what, const std::string& id) {
  throw Error(ErrorKind::kNotFound, what + " '" + id + "' not found");
}

}  // namespace

std::string_view to_string(InputSource s) {
  switch (s) {
    case InputSource::kUpload: return "upload";
    case InputSource::kSketch: return "sketch";
    case InputSource::kAttack: return "attack";
  }
  return "upload";
}

std::string model_entry_to_json(const ModelEntry& e) {
  Json j;
  j["id"] = e.id;
  j["name"] = e.name;
  j["input_shape"] = e.input_shape;
  j["layers"] = layers_json(e.layers);
  j["created_at"] = e.created_at;
  return j.dump();
}

std::string input_entry_to_json(const InputEntry& e) {
  Json j;
  j["id"] = e.id;
  j["model_id"] = e.model_id;
  j["source"] = std::string(to_string(e.source));
  j["shape"] = e.shape;
  j["parent_input_id"] = e.parent_input_id ? Json(*e.parent_input_id) : Json(nullptr);
  j["attack_spec"] = e.attack_spec ? Json::parse(e.attack_spec->to_json()) : Json(nullptr);
  j["created_at"] = e.created_at;
  return j.dump();
}

Registry::Registry(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "models");
  fs::create_directories(root_ / "inputs");
  fs::create_directories(root_ / "renders");
  load();
}

void Registry::load() {
  for (const auto& dir : fs::directory_iterator(root_ / "models")) {
    const auto entry_bytes = service::read_if_exists(dir.path() / kEntryFile);
    if (!entry_bytes) continue;
    const auto manifest = read_file_text(dir.path() / kManifestFile);
    const auto blob = read_file_bytes(dir.path() / kWeightsFile);
    auto model = std::make_shared<const Model>(parse_model(manifest, blob));
    const Json stored = Json::parse(text_of(*entry_bytes));
    ModelEntry e;
    e.id = content_id({bytes_of(manifest), blob});
    if (e.id != dir.path().filename().string()) {
      throw Error(ErrorKind::kIntegrity,
                  "stored model " + dir.path().string() + " does not match its id");
    }
    e.name = model->name;
    e.input_shape = model->input_shape;
    e.layers = extract_layers(*model);
    e.created_at = stored.at("created_at").get<std::string>();
    models_[e.id] = std::move(model);
    model_entries_[e.id] = std::move(e);
  }
  for (const auto& dir : fs::directory_iterator(root_ / "inputs")) {
    const auto entry_bytes = service::read_if_exists(dir.path() / kEntryFile);
    if (!entry_bytes) continue;
    const Json j = Json::parse(text_of(*entry_bytes));
    InputEntry e;
    e.id = j.at("id").get<std::string>();
    e.model_id = j.at("model_id").get<std::string>();
    e.source = parse_source(j.at("source").get<std::string>());
    e.shape = j.at("shape").get<Shape>();
    if (!j.at("parent_input_id").is_null()) {
      e.parent_input_id = j["parent_input_id"].get<std::string>();
    }
    if (!j.at("attack_spec").is_null()) {
      e.attack_spec = AttackSpec::from_json(j["attack_spec"].dump());
    }
    e.created_at = j.at("created_at").get<std::string>();
    const auto data = decode_float32_le(read_file_bytes(dir.path() / kTensorFile));
    inputs_[e.id] = std::make_shared<const Tensor>(e.shape, data);
    input_entries_[e.id] = std::move(e);
  }
}

ModelEntry Registry::add_model(std::string_view manifest, std::span<const std::byte> blob) {
  auto model = std::make_shared<const Model>(parse_model(manifest, blob));
  const std::string id = content_id({bytes_of(manifest), blob});
  std::lock_guard write(write_mutex_);
  {
    std::shared_lock read(mutex_);
    if (const auto it = model_entries_.find(id); it != model_entries_.end()) {
      return it->second;
    }
  }
  ModelEntry e;
  e.id = id;
  e.name = model->name;
  e.input_shape = model->input_shape;
  e.layers = extract_layers(*model);
  e.created_at = service::utc_now();

  const fs::path dir = root_ / "models" / id;
  atomic_write(dir / kManifestFile, bytes_of(manifest));
  atomic_write(dir / kWeightsFile, blob);
  atomic_write(dir / kEntryFile, bytes_of(model_entry_to_json(e)));

  std::unique_lock lock(mutex_);
  models_[id] = std::move(model);
  model_entries_[id] = e;
  return e;
}

std::vector<ModelEntry> Registry::list_models() const {
  std::shared_lock lock(mutex_);
  std::vector<ModelEntry> out;
  for (const auto& [id, e] : model_entries_) out.push_back(e);
  return out;
}

ModelEntry Registry::get_model_entry(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = model_entries_.find(id);
  if (it == model_entries_.end()) not_found("model", id);
  return it->second;
}

std::shared_ptr<const Model> Registry::get_model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = models_.find(id);
  if (it == models_.end()) not_found("model", id);
  return it->second;
}

InputEntry Registry::add_input(const std::string& model_id, const Tensor& pixels,
                               InputSource source,
                               std::optional<std::string> parent_input_id,
                               std::optional<AttackSpec> attack_spec) {
  const auto model = get_model(model_id);
  check_input(*model, pixels);
  if ((source == InputSource::kAttack) != (parent_input_id.has_value() && attack_spec.has_value())) {
    throw Error(ErrorKind::kInvalidInput,
                "parent input and attack spec are required exactly for attack inputs");
  }
  if (parent_input_id) get_input(model_id, *parent_input_id);

  const auto data = encode_float32_le(pixels.values());
  const std::string source_name(to_string(source));
  const std::string shape = shape_to_string(pixels.shape());
  const std::string parent = parent_input_id.value_or("");
  const std::string spec = attack_spec ? attack_spec->to_json() : "";
  const std::string id = content_id({bytes_of(model_id), bytes_of(source_name),
                                     bytes_of(parent), bytes_of(spec), bytes_of(shape),
                                     data});

  std::lock_guard write(write_mutex_);
  {
    std::shared_lock read(mutex_);
    if (const auto it = input_entries_.find(id); it != input_entries_.end()) {
      return it->second;
    }
  }
  InputEntry e;
  e.id = id;
  e.model_id = model_id;
  e.source = source;
  e.shape = pixels.shape();
  e.parent_input_id = std::move(parent_input_id);
  e.attack_spec = std::move(attack_spec);
  e.created_at = service::utc_now();

  const fs::path dir = root_ / "inputs" / id;
  atomic_write(dir / kTensorFile, data);
  atomic_write(dir / kEntryFile, bytes_of(input_entry_to_json(e)));

  std::unique_lock lock(mutex_);
  inputs_[id] = std::make_shared<const Tensor>(pixels);
  input_entries_[id] = e;
  return e;
}

std::vector<InputEntry> Registry::list_inputs(const std::string& model_id) const {
  get_model_entry(model_id);
  std::shared_lock lock(mutex_);
  std::vector<InputEntry> out;
  for (const auto& [id, e] : input_entries_) {
    if (e.model_id == model_id) out.push_back(e);
  }
  return out;
}

InputEntry Registry::get_input_entry(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = input_entries_.find(id);
  if (it == input_entries_.end()) not_found("input", id);
  return it->second;
}

std::shared_ptr<const Tensor> Registry::get_input(const std::string& model_id,
                                                  const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto entry = input_entries_.find(id);
  if (entry == input_entries_.end() || entry->second.model_id != model_id) {
    not_found("input", id);
  }
  return inputs_.at(id);
}

std::string Registry::put_render(const GrayImage& image) {
  const auto png = encode_png(image);
  const std::string id = content_id({png});
  const fs::path path = root_ / "renders" / (id + ".png");
  std::error_code ec;
  if (!fs::exists(path, ec)) atomic_write(path, png);
  return id;
}

std::optional<std::vector<std::byte>> Registry::get_render(const std::string& id) const {
  const bool hex = !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
  if (!hex) return std::nullopt;
  return service::read_if_exists(root_ / "renders" / (id + ".png"));
}

}  // namespace nvis
