#include "httplib.h"
#include "nvis/documents.hpp"
#include "nvis/model_io.hpp"
#include "nvis/service.hpp"

namespace nvis {

namespace {

constexpr const char* kJson = "application/json";

std::span<const std::byte> body_bytes(const std::string& body) { return as_bytes(body); }

void send_error(httplib::Response& res, const Error& e) {
  res.status = http_status(e.kind());
  res.set_content(error_to_document(e), kJson);
}

// Runs a route body and maps nvis errors to error documents.
template <class Fn>
httplib::Server::Handler route(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_to_document("internal", e.what()), kJson);
    }
  };
}

std::string form_part(const httplib::Request& req, const char* name) {
  if (!req.has_file(name)) {
    throw Error(ErrorKind::kInvalidInput,
                std::string("multipart upload needs a \"") + name + "\" part");
  }
  return req.get_file_value(name).content;
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  Service& svc = impl_->service;

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Post("/models", route([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto manifest = form_part(req, "manifest");
             const auto weights = form_part(req, "weights");
             res.status = 201;
             res.set_content(svc.upload_model(manifest, body_bytes(weights)), kJson);
           }));
  srv.Get("/models", route([&svc](const httplib::Request&, httplib::Response& res) {
            res.set_content(svc.list_models(), kJson);
          }));
  srv.Get(R"(/models/([0-9a-f]+))", route([&svc](const httplib::Request& req, httplib::Response& res) {
            res.set_content(svc.get_model(req.matches[1]), kJson);
          }));
  srv.Post(R"(/models/([0-9a-f]+)/inputs)",
           route([&svc](const httplib::Request& req, httplib::Response& res) {
             res.status = 201;
             res.set_content(svc.upload_input(req.matches[1], req.get_header_value("Content-Type"),
                                              body_bytes(req.body)),
                             kJson);
           }));
  srv.Get(R"(/models/([0-9a-f]+)/inputs)",
          route([&svc](const httplib::Request& req, httplib::Response& res) {
            res.set_content(svc.list_inputs(req.matches[1]), kJson);
          }));
  srv.Get(R"(/models/([0-9a-f]+)/inputs/([0-9a-f]+))",
          route([&svc](const httplib::Request& req, httplib::Response& res) {
            res.set_content(svc.get_input(req.matches[1], req.matches[2]), kJson);
          }));
  srv.Post(R"(/models/([0-9a-f]+)/sketch)",
           route([&svc](const httplib::Request& req, httplib::Response& res) {
             res.status = 201;
             res.set_content(svc.sketch_input(req.matches[1], req.body), kJson);
           }));

  using Member = std::string (Service::*)(const std::string&, std::string_view);
  const std::pair<const char*, Member> compute_routes[] = {
      {R"(/models/([0-9a-f]+)/predict)", &Service::predict},
      {R"(/models/([0-9a-f]+)/trace)", &Service::trace},
      {R"(/models/([0-9a-f]+)/compare)", &Service::compare},
      {R"(/models/([0-9a-f]+)/saliency)", &Service::saliency},
  };
  for (const auto& [pattern, member] : compute_routes) {
    srv.Post(pattern, route([&svc, member = member](const httplib::Request& req,
                                                     httplib::Response& res) {
               res.set_content((svc.*member)(req.matches[1], req.body), kJson);
             }));
  }
  srv.Post(R"(/models/([0-9a-f]+)/attack)",
           route([&svc](const httplib::Request& req, httplib::Response& res) {
             res.status = 201;
             res.set_content(svc.attack(req.matches[1], req.body), kJson);
           }));

  srv.Get(R"(/renders/([0-9a-zA-Z]+)(\.png)?)",
          route([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto png = svc.render(req.matches[1]);
            res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
            res.set_header("Cache-Control", "public, max-age=31536000, immutable");
          }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const ServerOptions& options) {
  auto& srv = impl_->server;
  if (!options.ui_dir.empty() && !srv.set_mount_point("/", options.ui_dir.string())) {
    throw Error(ErrorKind::kIo, "cannot serve UI directory " + options.ui_dir.string());
  }
  int port = options.port;
  if (port == 0) {
    port = srv.bind_to_any_port(options.host);
  } else if (!srv.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorKind::kIo, "cannot bind " + options.host + ":" + std::to_string(options.port));
  }
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace nvis
