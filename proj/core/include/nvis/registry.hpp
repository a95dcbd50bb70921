#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvis/attacks.hpp"
#include "nvis/image.hpp"
#include "nvis/model.hpp"
#include "nvis/tensor.hpp"

namespace nvis {

struct ModelEntry {
  std::string id;  // SHA-256 of manifest + weights blob
  std::string name;
  Shape input_shape;
  std::vector<LayerInfo> layers;
  std::string created_at;
};

enum class InputSource { kUpload, kSketch, kAttack };

std::string_view to_string(InputSource s);

struct InputEntry {
  std::string id;
  std::string model_id;
  InputSource source = InputSource::kUpload;
  Shape shape;
  std::optional<std::string> parent_input_id;  // set iff source == attack
  std::optional<AttackSpec> attack_spec;       // set iff source == attack
  std::string created_at;
};

// Content-addressed on-disk store of models, inputs and rendered PNGs:
//
//   <root>/models/<id>/{model.json,weights.bin,entry.json}
//   <root>/inputs/<id>/{tensor.bin,entry.json}
//   <root>/renders/<id>.png
//
// entry.json is written last; directories without it are ignored on load.
// Reads take a shared lock, writes are serialized.
class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Parses and validates; identical bytes return the existing entry.
  ModelEntry add_model(std::string_view manifest, std::span<const std::byte> blob);
  std::vector<ModelEntry> list_models() const;
  ModelEntry get_model_entry(const std::string& id) const;  // kNotFound
  std::shared_ptr<const Model> get_model(const std::string& id) const;

  // Checks shape against the model input and values in [0, 1].
  InputEntry add_input(const std::string& model_id, const Tensor& pixels,
                       InputSource source,
                       std::optional<std::string> parent_input_id = std::nullopt,
                       std::optional<AttackSpec> attack_spec = std::nullopt);
  std::vector<InputEntry> list_inputs(const std::string& model_id) const;
  InputEntry get_input_entry(const std::string& id) const;
  // Fails with kNotFound unless the input belongs to `model_id`.
  std::shared_ptr<const Tensor> get_input(const std::string& model_id,
                                          const std::string& id) const;

  std::string put_render(const GrayImage& image);
  std::optional<std::vector<std::byte>> get_render(const std::string& id) const;

 private:
  void load();

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::mutex write_mutex_;
  std::map<std::string, ModelEntry> model_entries_;
  std::map<std::string, std::shared_ptr<const Model>> models_;
  std::map<std::string, InputEntry> input_entries_;
  std::map<std::string, std::shared_ptr<const Tensor>> inputs_;
};

// JSON forms used in responses and entry.json files.
std::string model_entry_to_json(const ModelEntry& e);
std::string input_entry_to_json(const InputEntry& e);

}  // namespace nvis
