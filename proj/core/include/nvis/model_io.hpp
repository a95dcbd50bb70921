#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvis/model.hpp"

namespace nvis {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "model.json";
inline constexpr const char* kWeightsFile = "weights.bin";

// On-disk model: a JSON manifest plus a blob of little-endian float32
// values. Manifest offsets count elements, not bytes.
struct SerializedModel {
  std::string manifest;
  std::vector<std::byte> weights_blob;
};

// Throws kParse (malformed manifest, with a location such as
// "layers[2].kernel"), kIntegrity (blob length, out-of-range or
// overlapping offsets) or ValidationError.
Model parse_model(std::string_view manifest, std::span<const std::byte> blob);

// Weights are written in layer order, weights before bias within a layer.
// Throws ValidationError for an invalid model.
SerializedModel serialize_model(const Model& model);

Model load_model_dir(const std::filesystem::path& dir);
void save_model_dir(const Model& model, const std::filesystem::path& dir);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::byte> bytes);

// Raw little-endian float32 encoding used by the weight blob.
std::vector<std::byte> encode_float32_le(std::span<const float> values);
// Throws kIntegrity when the byte count is not a multiple of 4.
std::vector<float> decode_float32_le(std::span<const std::byte> bytes);

inline std::span<const std::byte> as_bytes(std::string_view s) {
  return std::as_bytes(std::span<const char>(s.data(), s.size()));
}

}  // namespace nvis
