#pragma once

// JSON configuration and the object graph it describes. Relative paths in a
// config file resolve against the file's directory.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cadence/gateway.hpp"
#include "cadence/pipeline.hpp"
#include "cadence/prompts.hpp"
#include "cadence/retrieval.hpp"
#include "cadence/service.hpp"

namespace cadence {

struct GatewayConfig {
  std::string kind = "scripted";  // scripted | remote
  std::filesystem::path rules;    // scripted: JSONL rules file
  std::optional<std::string> default_response;
  RemoteChatConfig remote;
  CompletionParams params;
};

struct EmbeddingConfig {
  std::string kind = "hashing";  // hashing | remote
  RemoteEmbedderConfig remote;
};

struct AppConfig {
  std::filesystem::path storage_dir;
  GatewayConfig gateway;
  EmbeddingConfig embedding;
  std::filesystem::path corpus_path;
  std::filesystem::path severity_standard_path;  // empty: built-in HAMD bands
  std::string prompt_locale = "en";
  std::filesystem::path template_dir;            // empty: built-in templates
  PipelineConfig pipeline;
  CyclicalOptions cyclical;
  std::vector<Account> accounts;
  std::string token_secret;
};

/// Throws FieldError naming the offending key.
AppConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

std::unique_ptr<ChatProvider> make_chat_provider(const GatewayConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingConfig& config);

/// Built-in templates, or template_dir overrides for prompt_locale.
PromptLibrary load_prompt_library(const AppConfig& config);
/// {"id", "text"} JSON file; an empty path gives the built-in HAMD bands.
SeverityStandard load_severity_standard(const std::filesystem::path& path);

/// Everything a running instance needs, wired from one AppConfig. Members
/// are declared in dependency order.
struct Runtime {
  explicit Runtime(AppConfig config, Clock clock = system_now);

  AppConfig config;
  std::unique_ptr<ChatProvider> chat;
  std::unique_ptr<EmbeddingProvider> embedder;
  PromptLibrary library;
  std::unique_ptr<ReportPipeline> pipeline;
  std::unique_ptr<AssessmentService> service;
};

}  // namespace cadence
