#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "nvis/attacks.hpp"
#include "nvis/diff.hpp"
#include "nvis/documents.hpp"
#include "nvis/engine.hpp"
#include "nvis/gradients.hpp"
#include "nvis/image.hpp"
#include "nvis/model_io.hpp"
#include "nvis/service.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

int exit_code_for(nvis::ErrorKind kind) {
  using nvis::ErrorKind;
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kIntegrity:
    case ErrorKind::kValidation:
    case ErrorKind::kInvalidShape:
    case ErrorKind::kInvalidInput:
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kRange:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void emit(const std::string& document) { std::cout << document << '\n'; }

nvis::FreezeConfig load_freeze(const std::string& path) {
  if (path.empty()) return {};
  return nvis::FreezeConfig::from_json(nvis::read_file_text(path));
}

std::string png_name(const char* prefix, std::size_t layer, std::size_t channel) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%03zu_ch%03zu.png", prefix, layer, channel);
  return buf;
}

nvis::RenderSink png_sink(const std::string& out_dir, const char* prefix) {
  if (out_dir.empty()) return {};
  fs::create_directories(out_dir);
  return [out_dir, prefix](std::size_t layer, std::size_t channel, const nvis::GrayImage& image) {
    const auto name = png_name(prefix, layer, channel);
    nvis::write_file_bytes(fs::path(out_dir) / name, nvis::encode_png(image));
    return name;
  };
}

void write_document(const std::string& out_dir, const char* file, const std::string& doc) {
  if (out_dir.empty()) return;
  nvis::write_file_bytes(fs::path(out_dir) / file, nvis::as_bytes(doc + "\n"));
}

struct Args {
  std::string model_dir;
  std::string input;
  std::string input_b;
  std::string freeze;
  std::string out;
  std::size_t layer = 0;
  std::size_t label = 0;
  std::string algorithm = "fgsm";
  float epsilon = 0.0f;
  int steps = 1;
  float step_size = 0.0f;
  std::string addr = "127.0.0.1:8080";
  std::string data_dir = "nvis-data";
  std::string ui_dir;
};

int run_validate(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  Json doc;
  doc["ok"] = true;
  doc["name"] = model.name;
  doc["input_shape"] = model.input_shape;
  doc["parameter_count"] = nvis::parameter_count(model);
  doc["layers"] = Json::parse(nvis::layers_to_document(nvis::extract_layers(model)));
  emit(doc.dump());
  return 0;
}

int run_predict(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  const auto p = nvis::predict(model, nvis::load_input(a.input));
  Json doc;
  doc["predicted_class"] = p.label;
  doc["probs"] = Json::parse(nvis::tensor_to_document(p.probs))["data"];
  emit(doc.dump());
  return 0;
}

int run_trace(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  const auto trace = nvis::mutate_output(model, nvis::load_input(a.input), load_freeze(a.freeze));
  const auto doc = nvis::trace_to_document(model, trace, png_sink(a.out, "layer"));
  write_document(a.out, "trace.json", doc);
  emit(doc);
  return 0;
}

int run_compare(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  const auto freeze = load_freeze(a.freeze);
  const auto ta = nvis::mutate_output(model, nvis::load_input(a.input), freeze);
  const auto tb = nvis::mutate_output(model, nvis::load_input(a.input_b), freeze);
  const auto report = nvis::compare_at_layer(ta, tb, a.layer);
  const auto doc = nvis::diff_to_document(report, png_sink(a.out, "heatmap"));
  write_document(a.out, "compare.json", doc);
  emit(doc);
  return 0;
}

int run_attack(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  const auto input = nvis::load_input(a.input);
  nvis::AttackSpec spec;
  if (a.algorithm == "bim") {
    spec.algorithm = nvis::AttackAlgorithm::kBim;
  } else if (a.algorithm != "fgsm") {
    throw nvis::Error(nvis::ErrorKind::kInvalidConfig, "unknown attack '" + a.algorithm + "'");
  }
  spec.epsilon = a.epsilon;
  spec.steps = a.steps;
  spec.step_size = a.step_size;
  spec.true_label = a.label;
  const auto adversarial = nvis::run_attack(model, input, spec);
  const auto before = nvis::predict(model, input);
  const auto after = nvis::predict(model, adversarial);

  Json doc;
  doc["spec"] = Json::parse(spec.to_json());
  doc["original_class"] = before.label;
  doc["predicted_class"] = after.label;
  doc["probs"] = Json::parse(nvis::tensor_to_document(after.probs))["data"];
  doc["linf"] = nvis::max_abs_difference(adversarial.values(), input.values());
  doc["adversarial"] = Json::parse(nvis::tensor_to_document(adversarial));
  if (!a.out.empty()) {
    nvis::write_file_bytes(a.out, nvis::as_bytes(nvis::tensor_to_document(adversarial) + "\n"));
  }
  emit(doc.dump());
  return 0;
}

int run_saliency(const Args& a) {
  const auto model = nvis::load_model_dir(a.model_dir);
  const auto map = nvis::saliency(model, nvis::load_input(a.input), a.label);
  Json doc;
  doc["label"] = a.label;
  doc["shape"] = map.values.shape();
  doc["values"] = Json::parse(nvis::tensor_to_document(map.values))["data"];
  if (!a.out.empty()) {
    nvis::write_file_bytes(a.out, nvis::encode_png(nvis::render_feature_map(map.values, 0)));
  }
  emit(doc.dump());
  return 0;
}

int run_serve(const Args& a) {
  auto options = nvis::parse_address(a.addr);
  options.ui_dir = a.ui_dir;

  // Route SIGINT/SIGTERM to this thread so the server can shut down cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  nvis::Service service(a.data_dir);
  nvis::HttpServer server(service);
  const int port = server.bind(options);
  std::cerr << "nvis: serving " << fs::absolute(a.data_dir).string() << " on http://"
            << options.host << ':' << port << std::endl;
  std::thread worker([&server] { server.serve(); });
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  worker.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nvis: inspect CNN classifiers layer by layer"};
  app.require_subcommand(1);
  Args a;

  auto add_model_input = [&a](CLI::App* cmd) {
    cmd->add_option("model_dir", a.model_dir, "Directory holding model.json and weights.bin")
        ->required();
    cmd->add_option("input", a.input, "Input PNG or tensor document")->required();
  };

  auto* validate = app.add_subcommand("validate", "Check a model directory");
  validate->add_option("model_dir", a.model_dir)->required();

  auto* predict = app.add_subcommand("predict", "Classify one input");
  add_model_input(predict);

  auto* trace = app.add_subcommand("trace", "Record every layer output");
  add_model_input(trace);
  trace->add_option("--freeze", a.freeze, "Freeze configuration document");
  trace->add_option("--out", a.out, "Directory for per-layer PNGs and trace.json");

  auto* compare = app.add_subcommand("compare", "Compare two inputs at one layer");
  add_model_input(compare);
  compare->add_option("input_b", a.input_b, "Second input")->required();
  compare->add_option("--layer", a.layer, "Layer index")->required();
  compare->add_option("--freeze", a.freeze, "Freeze configuration document");
  compare->add_option("--out", a.out, "Directory for heatmap PNGs and compare.json");

  auto* attack = app.add_subcommand("attack", "Generate an adversarial input");
  add_model_input(attack);
  attack->add_option("--alg", a.algorithm, "Attack algorithm")
      ->check(CLI::IsMember({"fgsm", "bim"}));
  attack->add_option("--eps", a.epsilon, "L-infinity budget")->required();
  attack->add_option("--steps", a.steps, "BIM iterations");
  attack->add_option("--step-size", a.step_size, "BIM step size");
  attack->add_option("--label", a.label, "True label")->required();
  attack->add_option("--out", a.out, "Write the adversarial tensor document here");

  auto* saliency = app.add_subcommand("saliency", "Input-gradient saliency map");
  add_model_input(saliency);
  saliency->add_option("--label", a.label, "Label to explain")->required();
  saliency->add_option("--out", a.out, "Write the rendered map as PNG");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", a.addr, "host:port")->envname("NVIS_ADDR")->capture_default_str();
  serve->add_option("--data-dir", a.data_dir, "Registry directory")
      ->envname("NVIS_DATA_DIR")
      ->capture_default_str();
  serve->add_option("--ui-dir", a.ui_dir, "Static UI files served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate) return run_validate(a);
    if (*predict) return run_predict(a);
    if (*trace) return run_trace(a);
    if (*compare) return run_compare(a);
    if (*attack) return run_attack(a);
    if (*saliency) return run_saliency(a);
    if (*serve) return run_serve(a);
  } catch (const nvis::Error& e) {
    emit(nvis::error_to_document(e));
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    emit(nvis::error_to_document("internal", e.what()));
    return kExitRuntime;
  }
  return kExitUsage;
}
