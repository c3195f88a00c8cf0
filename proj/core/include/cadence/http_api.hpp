#pragma once

// JSON-over-HTTP front end for AssessmentService. Every request except
// POST /auth/login carries "Authorization: Bearer <token>". Errors use the
// envelope {"error": {"code", "message", "fields"?}}.

#include <memory>
#include <string>

#include "cadence/service.hpp"

namespace cadence {

/// HTTP status for an error code.
int http_status(ErrorCode code);

/// Error envelope for the exception currently being handled.
Json error_body(const std::exception& e);

class HttpApi {
 public:
  explicit HttpApi(AssessmentService& service);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  /// Blocks until listen() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cadence
