#pragma once

#include <string>
#include <vector>

#include "cadence/serialization.hpp"

namespace cadence::detail {

struct Endpoint {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/chat"
};

/// Splits an absolute http(s) URL. Throws Error(kInvalidArgument).
Endpoint parse_endpoint(const std::string& url);

/// POSTs a JSON body and returns the parsed JSON response. Connection
/// failures map to kTransport, timeouts to kTimeout, non-2xx statuses to
/// kProvider (5xx and 429 to kTransport so callers retry them).
Json post_json(const Endpoint& endpoint, const Json& body, int timeout_ms,
               const std::vector<std::pair<std::string, std::string>>& headers = {});

}  // namespace cadence::detail
