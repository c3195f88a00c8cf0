#include <cmath>

#include "cadence/retrieval.hpp"
#include "http_client.hpp"

#include <httplib.h>

namespace cadence {
namespace detail {

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint must be an absolute URL: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kInvalidArgument, "unsupported URL scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint endpoint;
  endpoint.scheme_host_port = url.substr(0, path_start);
  endpoint.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (endpoint.scheme_host_port.size() <= scheme_end + 3) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint has no host: " + url);
  }
  return endpoint;
}

Json post_json(const Endpoint& endpoint, const Json& body, int timeout_ms,
               const std::vector<std::pair<std::string, std::string>>& headers) {
  httplib::Client client(endpoint.scheme_host_port);
  const auto seconds = timeout_ms / 1000;
  const auto micros = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto result = client.Post(endpoint.path, hdrs, body.dump(), "application/json");
  if (!result) {
    const auto err = result.error();
    const std::string what = endpoint.scheme_host_port + endpoint.path + ": " + httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::kTimeout, what);
    }
    throw Error(ErrorCode::kTransport, what);
  }
  if (result->status == 429 || result->status >= 500) {
    throw Error(ErrorCode::kTransport,
                "HTTP " + std::to_string(result->status) + " from " + endpoint.path);
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorCode::kProvider, "HTTP " + std::to_string(result->status) + " from " +
                                          endpoint.path + ": " + result->body);
  }
  try {
    return Json::parse(result->body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kProvider, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace detail

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)), dimension_(config_.dimension) {
  detail::parse_endpoint(config_.endpoint);
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::kDomain, "cannot embed empty text");
  const Json response =
      detail::post_json(detail::parse_endpoint(config_.endpoint),
                        Json{{"model", config_.model}, {"prompt", std::string(text)}},
                        config_.timeout_ms);
  auto it = response.find("embedding");
  if (it == response.end() || !it->is_array() || it->empty()) {
    throw Error(ErrorCode::kProvider, "embedding response lacks a non-empty \"embedding\" array");
  }
  EmbeddingVector v;
  v.values.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      throw Error(ErrorCode::kProvider, "embedding holds a non-finite or non-numeric entry");
    }
    v.values.push_back(x.get<double>());
  }
  std::size_t expected = 0;
  if (dimension_.compare_exchange_strong(expected, v.dim())) return v;
  if (expected != v.dim()) {
    throw Error(ErrorCode::kProvider, "embedding dimension changed from " +
                                          std::to_string(expected) + " to " +
                                          std::to_string(v.dim()));
  }
  return v;
}

}  // namespace cadence
