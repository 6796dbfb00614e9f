#pragma once

// HTTP/1.1 front end over service::Api.

#include <memory>
#include <string>

#include "guiyun/service.h"

namespace guiyun::service {

class HttpServer {
 public:
  HttpServer(Api& api, std::string cors_origin);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws
  /// Error("io") when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guiyun::service
