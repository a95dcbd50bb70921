#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nvis/diff.hpp"
#include "nvis/engine.hpp"
#include "nvis/error.hpp"
#include "nvis/image.hpp"
#include "nvis/model.hpp"

namespace nvis {

// JSON documents shared by the CLI and the HTTP service.

// {"shape":[...],"data":[...]}
std::string tensor_to_document(const Tensor& t);
Tensor tensor_from_document(std::string_view document);

// Reads an input tensor from a .png file or a tensor document.
Tensor load_input(const std::filesystem::path& path);

// Called once per rendered channel; returns the reference (file name,
// render id) recorded in the document.
using RenderSink = std::function<std::string(
    std::size_t layer, std::size_t channel, const GrayImage& image)>;

using HeaderFields = std::vector<std::pair<std::string, std::string>>;

// [{"index","kind","output_shape","filter_count"}, ...]
std::string layers_to_document(const std::vector<LayerInfo>& layers);

// Per-layer shapes, frozen filters and (with a sink) render references,
// then the class probabilities and predicted class. `header` string fields
// come first.
std::string trace_to_document(const Model& model, const InferenceTrace& trace,
                              const RenderSink& sink = {},
                              const HeaderFields& header = {});

// Metrics, the full channel ranking, and (with a sink) one heatmap render
// per channel.
std::string diff_to_document(const DiffReport& report,
                             const RenderSink& heatmap_sink = {},
                             const HeaderFields& header = {});

// {"error":{"kind":...,"detail":...}}
std::string error_to_document(ErrorKind kind, std::string_view detail);
std::string error_to_document(std::string_view kind, std::string_view detail);
// Adds a "violations" array for ValidationError.
std::string error_to_document(const Error& error);

}  // namespace nvis
