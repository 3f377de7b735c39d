#include <thread>

#include "httplib.h"
#include "prism/service.hpp"

namespace prism {
namespace {

bool flag_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const std::string v = req.get_param_value(name);
  return v == "true" || v == "1";
}

void reply(httplib::Response& res, const ServiceResponse& out) {
  res.status = out.status;
  res.set_content(out.body, "application/json");
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<PrismService> service;
  httplib::Server server;
  std::thread worker;
};

HttpServer::HttpServer(std::shared_ptr<PrismService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& srv = impl_->server;
  auto svc = impl_->service;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  srv.Post("/v1/filter", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_filter(req.body));
  });
  srv.Post("/v1/feedback", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_feedback(req.body));
  });
  srv.Get("/v1/profiles/:user_id", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_get_profile(req.path_params.at("user_id"), flag_param(req, "init")));
  });
  srv.Get("/v1/queue/:user_id", [svc](const httplib::Request& req, httplib::Response& res) {
    std::size_t limit = 10;
    if (req.has_param("limit")) {
      const std::string v = req.get_param_value("limit");
      char* end = nullptr;
      const long parsed = std::strtol(v.c_str(), &end, 10);
      if (v.empty() || *end != '\0' || parsed < 0) {
        reply(res, {400, R"({"error":"limit must be a non-negative integer"})"});
        return;
      }
      limit = static_cast<std::size_t>(parsed);
    }
    reply(res, svc->handle_queue(req.path_params.at("user_id"), limit, flag_param(req, "reveal")));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw ConfigError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace prism
