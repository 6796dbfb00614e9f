#include "guiyun/server.h"

#include <functional>

#include <httplib.h>

#include "guiyun/error.h"

namespace guiyun::service {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void guarded(httplib::Response& res, const std::function<json()>& handler) {
  try {
    send(res, 200, handler());
  } catch (const Error& e) {
    send(res, http_status(e.code()), error_json(e.code(), e.what()));
  } catch (const json::exception& e) {
    send(res, 400, error_json("invalid_request", e.what()));
  } catch (const std::exception& e) {
    send(res, 500, error_json("internal", e.what()));
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw Error("invalid_request", "empty request body");
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error("invalid_json", e.what());
  }
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Api& api, std::string cors_origin) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto post = [&](const char* path, std::function<json(const json&)> fn) {
    s.Post(path, [fn](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { return fn(parse_body(req)); });
    });
  };
  post("/generate", [&api](const json& b) { return api.generate(b); });
  post("/follow-rhyme", [&api](const json& b) { return api.follow_rhyme(b); });
  post("/analyze", [&api](const json& b) { return api.analyze(b); });
  post("/extract", [&api](const json& b) { return api.extract(b); });

  s.Get("/ledger/check", [&api](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("text")) throw Error("invalid_request", "missing query parameter 'text'");
      return api.ledger_check(req.get_param_value("text"));
    });
  });
  s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"status", "ok"}}); });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("io", "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace guiyun::service
