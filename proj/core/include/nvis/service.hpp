#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "nvis/error.hpp"
#include "nvis/registry.hpp"

namespace nvis {

// HTTP-independent implementation of every service route. Request bodies
// and results are JSON documents; failures throw nvis::Error and are turned
// into {"error":{"kind","detail"}} bodies by the transport.
class Service {
 public:
  explicit Service(std::filesystem::path data_dir);

  Registry& registry() noexcept { return registry_; }

  // POST /models
  std::string upload_model(std::string_view manifest, std::span<const std::byte> blob);
  // GET /models, GET /models/{id}
  std::string list_models() const;
  std::string get_model(const std::string& model_id) const;

  // POST /models/{id}/inputs: a PNG image or a {"shape","data"} document.
  std::string upload_input(const std::string& model_id, std::string_view content_type,
                           std::span<const std::byte> body);
  // GET /models/{id}/inputs, GET /models/{id}/inputs/{input_id}
  std::string list_inputs(const std::string& model_id) const;
  // The single-input form also returns the pixel data and one render per
  // channel.
  std::string get_input(const std::string& model_id, const std::string& input_id);
  // POST /models/{id}/sketch {"pixels":[...]}
  std::string sketch_input(const std::string& model_id, std::string_view body);

  // POST /models/{id}/predict {"input_id"}
  std::string predict(const std::string& model_id, std::string_view body);
  // POST /models/{id}/trace {"input_id","freeze"}
  std::string trace(const std::string& model_id, std::string_view body);
  // POST /models/{id}/compare {"input_a","input_b","layer_index","freeze"}
  std::string compare(const std::string& model_id, std::string_view body);
  // POST /models/{id}/attack {"input_id","spec"}
  std::string attack(const std::string& model_id, std::string_view body);
  // POST /models/{id}/saliency {"input_id","label"}
  std::string saliency(const std::string& model_id, std::string_view body);

  // GET /renders/{id}; kNotFound when absent.
  std::vector<std::byte> render(const std::string& render_id) const;

 private:
  Registry registry_;
};

// HTTP status for an error kind (404 not found, 422 unsupported model,
// 500 io, otherwise 400).
int http_status(ErrorKind kind);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path ui_dir;  // served at / when non-empty
};

// Parses "host:port" (NVIS_ADDR form).
ServerOptions parse_address(std::string_view address);

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds the socket and returns the bound port. Throws kIo on failure.
  int bind(const ServerOptions& options);
  // Serves until stop(); blocks the calling thread.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nvis
