#include "cadence/gateway.hpp"

#include <chrono>
#include <fstream>
#include <thread>

namespace cadence {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

CompletionParams CompletionParams::for_reports() {
  CompletionParams params;
  params.temperature = 0.0;
  params.max_tokens = 2048;
  return params;
}

ScriptedRule ScriptedRule::substring(std::string needle, std::string response) {
  ScriptedRule rule;
  rule.pattern = std::move(needle);
  rule.response = std::move(response);
  return rule;
}

ScriptedRule ScriptedRule::regex(const std::string& pattern, std::string response) {
  ScriptedRule rule;
  rule.pattern = pattern;
  try {
    rule.compiled.emplace(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "bad rule pattern /" + pattern + "/: " + e.what());
  }
  rule.response = std::move(response);
  return rule;
}

ScriptedRule ScriptedRule::computed(std::string needle, Responder responder) {
  ScriptedRule rule;
  rule.pattern = std::move(needle);
  rule.responder = std::move(responder);
  return rule;
}

bool ScriptedRule::matches(std::string_view last_user) const {
  if (compiled) return std::regex_search(last_user.begin(), last_user.end(), *compiled);
  return last_user.find(pattern) != std::string_view::npos;
}

std::string ScriptedRule::respond(std::span<const ChatMessage> messages) const {
  return responder ? responder(messages) : response;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptedRule> rules, std::string default_response)
    : rules_(std::move(rules)), default_response_(std::move(default_response)) {}

std::string ScriptedProvider::complete(std::span<const ChatMessage> messages,
                                       const CompletionParams&) {
  {
    std::lock_guard lock(mutex_);
    log_.emplace_back(messages.begin(), messages.end());
  }
  std::string_view last_user;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == ChatRole::kUser) {
      last_user = it->content;
      break;
    }
  }
  for (const auto& rule : rules_) {
    if (rule.matches(last_user)) return rule.respond(messages);
  }
  return default_response_;
}

std::vector<std::vector<ChatMessage>> ScriptedProvider::call_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

std::vector<ScriptedRule> ScriptedProvider::load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scripted rules " + path.string());
  std::vector<ScriptedRule> rules;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (is_blank(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("match") || !j["match"].is_string() ||
        !j.contains("response") || !j["response"].is_string()) {
      throw Error(ErrorCode::kParse, where + ": rule needs string \"match\" and \"response\"");
    }
    const bool is_regex = j.value("regex", false);
    auto match = j["match"].get<std::string>();
    auto response = j["response"].get<std::string>();
    rules.push_back(is_regex ? ScriptedRule::regex(match, std::move(response))
                             : ScriptedRule::substring(std::move(match), std::move(response)));
  }
  return rules;
}

std::string complete_chat(std::span<const ChatMessage> messages, const CompletionParams& params,
                          ChatProvider& provider) {
  if (messages.empty()) throw Error(ErrorCode::kDomain, "chat needs at least one message");
  if (messages.back().role != ChatRole::kUser) {
    throw Error(ErrorCode::kDomain, "the last chat message must come from the user");
  }
  for (const auto& m : messages) {
    if (m.role != ChatRole::kSystem && m.content.empty()) {
      throw Error(ErrorCode::kDomain, "user and assistant messages must not be empty");
    }
  }
  if (params.retries < 0 || params.timeout_ms <= 0 || params.max_tokens <= 0 || params.temperature < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid completion parameters");
  }
  int delay_ms = params.backoff_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      return provider.complete(messages, params);
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= params.retries) throw;
    }
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    delay_ms *= 2;
  }
}

namespace {

// End of the balanced object starting at text[open], honouring strings and
// escapes; npos if the braces never balance.
std::size_t balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

Json extract_json(std::string_view text) {
  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto close = balanced_end(text, open);
    if (close == std::string_view::npos) continue;
    Json parsed = Json::parse(text.substr(open, close - open + 1), nullptr, /*allow_exceptions=*/false);
    if (parsed.is_object()) return parsed;
  }
  throw Error(ErrorCode::kParse, "no JSON object found in model output");
}

DiagnosticReport parse_report(std::string_view text) {
  Json j;
  try {
    j = extract_json(text);
  } catch (const Error& e) {
    throw FieldError("report", e.what());
  }
  DiagnosticReport report = report_from_json(j);
  auto violations = validate_report(report);
  if (!violations.empty()) {
    std::vector<std::string> fields;
    for (const auto& v : violations) fields.push_back(v.field);
    throw FieldError(std::move(fields), "report is inconsistent: " + describe(violations));
  }
  return report;
}

ReportReply request_report(std::string_view prompt, ChatProvider& provider, CompletionParams params,
                           std::string_view corrective_message) {
  params.temperature = 0.0;
  std::vector<ChatMessage> messages{{ChatRole::kUser, std::string(prompt)}};
  std::vector<std::string> raws;
  raws.push_back(complete_chat(messages, params, provider));
  try {
    return {parse_report(raws.back()), raws.back(), 1};
  } catch (const FieldError&) {
  }
  messages.push_back({ChatRole::kAssistant, raws.back().empty() ? std::string("(empty)") : raws.back()});
  messages.push_back({ChatRole::kUser, std::string(corrective_message)});
  raws.push_back(complete_chat(messages, params, provider));
  try {
    return {parse_report(raws.back()), raws.back(), 2};
  } catch (const FieldError& e) {
    throw ReportGenerationError(e, std::move(raws));
  }
}

}  // namespace cadence
