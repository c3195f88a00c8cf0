#pragma once

// Chat-completion access behind one interface, a scripted provider for
// offline runs, and extraction of the fixed-format JSON report from model
// output.

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cadence/domain.hpp"
#include "cadence/serialization.hpp"

namespace cadence {

enum class ChatRole { kSystem, kUser, kAssistant };
std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionParams {
  double temperature = 0.7;
  int max_tokens = 1024;
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 250;  // doubled after every failed attempt

  /// Report generation is pinned to temperature 0.
  static CompletionParams for_reports();
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// One attempt. Throws Error(kTransport/kTimeout) for retryable failures
  /// and Error(kProvider) for errors reported by the service.
  virtual std::string complete(std::span<const ChatMessage> messages,
                               const CompletionParams& params) = 0;
};

/// Ordered rule; the first rule matching the last user message answers.
struct ScriptedRule {
  using Responder = std::function<std::string(std::span<const ChatMessage>)>;

  static ScriptedRule substring(std::string needle, std::string response);
  static ScriptedRule regex(const std::string& pattern, std::string response);
  static ScriptedRule computed(std::string needle, Responder responder);

  bool matches(std::string_view last_user) const;
  std::string respond(std::span<const ChatMessage> messages) const;

  std::string pattern;
  std::optional<std::regex> compiled;  // set for regex rules
  std::string response;
  Responder responder;  // overrides response when set
};

/// Deterministic test double: output is a pure function of the rules and the
/// messages. Records every call for inspection.
class ScriptedProvider final : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptedRule> rules = {},
                            std::string default_response = "I hear you. Could you tell me more?");

  std::string complete(std::span<const ChatMessage> messages,
                       const CompletionParams& params) override;

  std::vector<std::vector<ChatMessage>> call_log() const;
  std::size_t calls() const;

  /// JSONL of {"match": str, "response": str, "regex": bool?}.
  static std::vector<ScriptedRule> load_rules(const std::filesystem::path& path);

 private:
  std::vector<ScriptedRule> rules_;
  std::string default_response_;
  mutable std::mutex mutex_;
  std::vector<std::vector<ChatMessage>> log_;
};

enum class ChatWireFormat {
  kGeneric,  // {"model","messages","temperature","max_tokens"} -> {"content"}
  kOpenAI,   // same request, response choices[0].message.content
};

struct RemoteChatConfig {
  std::string endpoint;
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the key
  ChatWireFormat format = ChatWireFormat::kGeneric;
};

class RemoteChatProvider final : public ChatProvider {
 public:
  explicit RemoteChatProvider(RemoteChatConfig config);

  std::string complete(std::span<const ChatMessage> messages,
                       const CompletionParams& params) override;

  static Json request_body(std::span<const ChatMessage> messages, const CompletionParams& params,
                           const std::string& model);
  static std::string read_content(const Json& response, ChatWireFormat format);

 private:
  RemoteChatConfig config_;
};

/// Validates the conversation, then calls the provider, retrying retryable
/// failures up to params.retries times with exponential backoff.
std::string complete_chat(std::span<const ChatMessage> messages, const CompletionParams& params,
                          ChatProvider& provider);

/// First syntactically valid top-level JSON object in text; surrounding
/// prose and code fences are ignored. Throws Error(kParse) if none exists.
Json extract_json(std::string_view text);

/// extract_json, field mapping and validate_report. Throws FieldError naming
/// the offending fields.
DiagnosticReport parse_report(std::string_view text);

/// Report generation gave up after the corrective round.
class ReportGenerationError : public FieldError {
 public:
  ReportGenerationError(const FieldError& cause, std::vector<std::string> raw_outputs)
      : FieldError(cause.fields(), std::string("model output is not a valid report: ") + cause.what()),
        raw_outputs_(std::move(raw_outputs)) {}

  /// Every model output received, for audit.
  const std::vector<std::string>& raw_outputs() const noexcept { return raw_outputs_; }

 private:
  std::vector<std::string> raw_outputs_;
};

struct ReportReply {
  DiagnosticReport report;
  std::string raw;
  int rounds = 1;
};

/// Sends the prompt at temperature 0 and parses the reply. A malformed reply
/// gets exactly one corrective round; a second failure throws
/// ReportGenerationError carrying the raw outputs.
ReportReply request_report(std::string_view prompt, ChatProvider& provider,
                           CompletionParams params = CompletionParams::for_reports(),
                           std::string_view corrective_message =
                               "Output only the JSON object of the report, with no other text.");

}  // namespace cadence
