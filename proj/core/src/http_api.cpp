#include "cadence/http_api.hpp"

#include <httplib.h>

namespace cadence {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
      return 400;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kForbidden:
      return 403;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kValidation:
      return 422;
    case ErrorCode::kTransport:
    case ErrorCode::kProvider:
      return 502;
    case ErrorCode::kTimeout:
      return 504;
    case ErrorCode::kIo:
      return 500;
  }
  return 500;
}

Json error_body(const std::exception& e) {
  Json error{{"message", e.what()}};
  if (const auto* validation = dynamic_cast<const ValidationError*>(&e)) {
    Json fields = Json::array();
    Json violations = Json::array();
    for (const auto& v : validation->violations()) {
      fields.push_back(v.field);
      violations.push_back({{"field", v.field}, {"message", v.message}});
    }
    error["code"] = to_string(validation->code());
    error["fields"] = fields;
    error["violations"] = violations;
  } else if (const auto* field = dynamic_cast<const FieldError*>(&e)) {
    error["code"] = to_string(field->code());
    error["fields"] = field->fields();
  } else if (const auto* err = dynamic_cast<const Error*>(&e)) {
    error["code"] = to_string(err->code());
  } else {
    error["code"] = "internal";
  }
  return Json{{"error", error}};
}

namespace {

using Request = httplib::Request;
using Response = httplib::Response;

void send(Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json parse_body(const Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

std::string require_text(const Json& body, const std::string& key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) throw FieldError(key, key + " must be a string");
  return it->get<std::string>();
}

Date require_date_param(const Request& req, const std::string& key) {
  if (!req.has_param(key)) throw FieldError(key, "missing query parameter " + key);
  auto day = parse_date(req.get_param_value(key));
  if (!day) throw FieldError(key, key + " must be YYYY-MM-DD");
  return *day;
}

}  // namespace

struct HttpApi::Impl {
  AssessmentService& service;
  httplib::Server server;

  explicit Impl(AssessmentService& s) : service(s) {}

  const Account& caller(const Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view kPrefix = "Bearer ";
    if (header.rfind(kPrefix, 0) != 0) throw Error(ErrorCode::kUnauthorized, "invalid or missing token");
    return service.authenticate(std::string_view(header).substr(kPrefix.size()));
  }

  // Wraps a handler so that every exception becomes the error envelope.
  httplib::Server::Handler wrap(std::function<void(const Request&, Response&)> fn) {
    return [fn = std::move(fn)](const Request& req, Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send(res, http_status(e.code()), error_body(e));
      } catch (const Json::exception& e) {
        send(res, 400, Json{{"error", {{"code", "parse_error"}, {"message", e.what()}}}});
      } catch (const std::exception& e) {
        send(res, 500, error_body(e));
      }
    };
  }

  void routes() {
    server.Post("/auth/login", wrap([this](const Request& req, Response& res) {
      const Json body = parse_body(req);
      const std::string account_id = require_text(body, "account_id");
      const std::string token = service.login(account_id, require_text(body, "secret"));
      const Account& acc = service.account(account_id);
      send(res, 200, {{"token", token}, {"account_id", acc.id}, {"role", to_string(acc.role)}});
    }));

    server.Post("/sessions", wrap([this](const Request& req, Response& res) {
      send(res, 201, to_json(service.open_session(caller(req).id)));
    }));
    server.Get("/sessions/:id", wrap([this](const Request& req, Response& res) {
      send(res, 200, to_json(service.session(caller(req).id, req.path_params.at("id"))));
    }));
    server.Post("/sessions/:id/turns", wrap([this](const Request& req, Response& res) {
      const Account& acc = caller(req);
      const Json body = parse_body(req);
      const Turn reply = service.post_turn(acc.id, req.path_params.at("id"), require_text(body, "text"));
      send(res, 200, {{"reply", reply}});
    }));
    server.Post("/sessions/:id/close", wrap([this](const Request& req, Response& res) {
      auto job = service.close_session(caller(req).id, req.path_params.at("id"));
      send(res, 202, {{"job_id", job ? Json(*job) : Json(nullptr)}});
    }));
    server.Get("/jobs/:id", wrap([this](const Request& req, Response& res) {
      caller(req);
      send(res, 200, to_json(service.job_status(req.path_params.at("id"))));
    }));

    server.Get("/patients", wrap([this](const Request& req, Response& res) {
      Json out = Json::array();
      for (const auto& p : service.list_patients(caller(req).id)) out.push_back(to_json(p));
      send(res, 200, {{"patients", out}});
    }));
    server.Get("/patients/:id/timeline", wrap([this](const Request& req, Response& res) {
      Json out = Json::array();
      for (const auto& e : service.get_timeline(req.path_params.at("id"), caller(req).id)) out.push_back(to_json(e));
      send(res, 200, {{"entries", out}});
    }));
    server.Get("/patients/:id/cyclical", wrap([this](const Request& req, Response& res) {
      const Account& acc = caller(req);
      const DateRange window{require_date_param(req, "from"), require_date_param(req, "to")};
      send(res, 200, to_json(service.cyclical(req.path_params.at("id"), acc.id, window)));
    }));

    server.Get("/reports/:id", wrap([this](const Request& req, Response& res) {
      send(res, 200, service.get_report(req.path_params.at("id"), caller(req).id));
    }));
    server.Patch("/reports/:id", wrap([this](const Request& req, Response& res) {
      const Account& acc = caller(req);
      send(res, 200, to_json(service.revise_report(acc.id, req.path_params.at("id"), parse_body(req))));
    }));
    server.Post("/reports/:id/release", wrap([this](const Request& req, Response& res) {
      send(res, 200, to_json(service.release_report(caller(req).id, req.path_params.at("id"))));
    }));
    server.Post("/reports/:id/feedback", wrap([this](const Request& req, Response& res) {
      const Account& acc = caller(req);
      const Json body = parse_body(req);
      send(res, 201, to_json(service.submit_feedback(acc.id, req.path_params.at("id"), require_text(body, "text"))));
    }));
  }
};

HttpApi::HttpApi(AssessmentService& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpApi::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace cadence
