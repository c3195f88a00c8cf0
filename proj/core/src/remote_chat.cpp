#include <cstdlib>

#include "cadence/gateway.hpp"
#include "http_client.hpp"

namespace cadence {

RemoteChatProvider::RemoteChatProvider(RemoteChatConfig config) : config_(std::move(config)) {
  detail::parse_endpoint(config_.endpoint);
}

Json RemoteChatProvider::request_body(std::span<const ChatMessage> messages,
                                      const CompletionParams& params, const std::string& model) {
  Json list = Json::array();
  for (const auto& m : messages) list.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return Json{{"model", model},
              {"messages", std::move(list)},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
}

std::string RemoteChatProvider::read_content(const Json& response, ChatWireFormat format) {
  if (response.is_object() && response.contains("error")) {
    throw Error(ErrorCode::kProvider, "provider error: " + response["error"].dump());
  }
  Json content;
  if (format == ChatWireFormat::kGeneric) {
    if (response.is_object()) content = response.value("content", Json());
  } else if (response.is_object() && response.contains("choices") && response["choices"].is_array() &&
             !response["choices"].empty() && response["choices"][0].is_object()) {
    content = response["choices"][0].value("message", Json::object()).value("content", Json());
  }
  if (!content.is_string()) throw Error(ErrorCode::kProvider, "chat response has no string content");
  return content.get<std::string>();
}

std::string RemoteChatProvider::complete(std::span<const ChatMessage> messages,
                                         const CompletionParams& params) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  const Json response = detail::post_json(detail::parse_endpoint(config_.endpoint),
                                          request_body(messages, params, config_.model),
                                          params.timeout_ms, headers);
  return read_content(response, config_.format);
}

}  // namespace cadence
