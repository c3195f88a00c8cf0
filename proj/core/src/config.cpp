#include "cadence/config.hpp"

#include <fstream>

namespace cadence {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

template <typename T>
T read_or(const Json& j, const std::string& key, T fallback, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw FieldError(path + key, path + key + " has the wrong type");
  }
}

const Json& section(const Json& j, const std::string& key) {
  static const Json kEmpty = Json::object();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return kEmpty;
  if (!it->is_object()) throw FieldError(key, key + " must be an object");
  return *it;
}

Account read_account(const Json& j, std::size_t index) {
  const std::string path = "accounts[" + std::to_string(index) + "].";
  if (!j.is_object()) throw FieldError("accounts[" + std::to_string(index) + "]", "account must be an object");
  Account account;
  account.id = read_or<std::string>(j, "id", "", path);
  if (account.id.empty()) throw FieldError(path + "id", "account id is required");
  auto role = parse_role(read_or<std::string>(j, "role", "", path));
  if (!role) throw FieldError(path + "role", "role must be patient, family or doctor");
  account.role = *role;
  account.display_name = read_or<std::string>(j, "display_name", account.id, path);
  account.patient_ids = read_or<std::vector<std::string>>(j, "patients", {}, path);
  account.secret = read_or<std::string>(j, "secret", "", path);
  if (account.secret.empty()) throw FieldError(path + "secret", "account secret is required");
  return account;
}

}  // namespace

AppConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw FieldError("config", "config must be a JSON object");
  AppConfig config;
  config.storage_dir = resolve(base_dir, read_or<std::string>(j, "storage_dir", "", ""));
  config.corpus_path = resolve(base_dir, read_or<std::string>(j, "corpus_path", "", ""));
  if (config.corpus_path.empty()) throw FieldError("corpus_path", "corpus_path is required");
  config.severity_standard_path = resolve(base_dir, read_or<std::string>(j, "severity_standard_path", "", ""));
  config.prompt_locale = read_or<std::string>(j, "prompt_locale", "en", "");
  config.template_dir = resolve(base_dir, read_or<std::string>(j, "template_dir", "", ""));
  config.token_secret = read_or<std::string>(j, "token_secret", "", "");

  const Json& gateway = section(j, "gateway");
  config.gateway.kind = read_or<std::string>(gateway, "kind", "scripted", "gateway.");
  if (config.gateway.kind != "scripted" && config.gateway.kind != "remote") {
    throw FieldError("gateway.kind", "gateway.kind must be scripted or remote");
  }
  config.gateway.rules = resolve(base_dir, read_or<std::string>(gateway, "rules", "", "gateway."));
  if (gateway.contains("default_response")) {
    config.gateway.default_response = read_or<std::string>(gateway, "default_response", "", "gateway.");
  }
  config.gateway.remote.endpoint = read_or<std::string>(gateway, "endpoint", "", "gateway.");
  config.gateway.remote.model = read_or<std::string>(gateway, "model", "", "gateway.");
  config.gateway.remote.api_key_env = read_or<std::string>(gateway, "api_key_env", "", "gateway.");
  const std::string format = read_or<std::string>(gateway, "format", "generic", "gateway.");
  if (format == "generic") {
    config.gateway.remote.format = ChatWireFormat::kGeneric;
  } else if (format == "openai") {
    config.gateway.remote.format = ChatWireFormat::kOpenAI;
  } else {
    throw FieldError("gateway.format", "gateway.format must be generic or openai");
  }
  config.gateway.params.timeout_ms = read_or<int>(gateway, "timeout_ms", config.gateway.params.timeout_ms, "gateway.");
  config.gateway.params.retries = read_or<int>(gateway, "retries", config.gateway.params.retries, "gateway.");
  config.gateway.params.temperature =
      read_or<double>(gateway, "temperature", config.gateway.params.temperature, "gateway.");
  if (config.gateway.kind == "remote" && config.gateway.remote.endpoint.empty()) {
    throw FieldError("gateway.endpoint", "a remote gateway needs an endpoint");
  }

  const Json& embedding = section(j, "embedding");
  config.embedding.kind = read_or<std::string>(embedding, "kind", "hashing", "embedding.");
  if (config.embedding.kind != "hashing" && config.embedding.kind != "remote") {
    throw FieldError("embedding.kind", "embedding.kind must be hashing or remote");
  }
  config.embedding.remote.endpoint = read_or<std::string>(embedding, "endpoint", "", "embedding.");
  config.embedding.remote.model = read_or<std::string>(embedding, "model", "", "embedding.");
  config.embedding.remote.dimension = read_or<std::size_t>(embedding, "dim", 0, "embedding.");
  if (config.embedding.kind == "remote" && config.embedding.remote.endpoint.empty()) {
    throw FieldError("embedding.endpoint", "a remote embedder needs an endpoint");
  }

  const Json& pipeline = section(j, "pipeline");
  config.pipeline.prompt_options.use_rag = read_or<bool>(pipeline, "use_rag", true, "pipeline.");
  config.pipeline.prompt_options.use_cot = read_or<bool>(pipeline, "use_cot", true, "pipeline.");
  config.pipeline.prompt_options.locale = config.prompt_locale;
  config.pipeline.include_family_content_in_retrieval =
      read_or<bool>(pipeline, "include_family_content_in_retrieval", false, "pipeline.");
  config.pipeline.chat_params = config.gateway.params;
  config.cyclical.exclude_empty_days = read_or<bool>(pipeline, "exclude_empty_days", false, "pipeline.");

  auto accounts = j.find("accounts");
  if (accounts == j.end() || !accounts->is_array()) throw FieldError("accounts", "accounts must be an array");
  for (std::size_t i = 0; i < accounts->size(); ++i) config.accounts.push_back(read_account((*accounts)[i], i));
  return config;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::unique_ptr<ChatProvider> make_chat_provider(const GatewayConfig& config) {
  if (config.kind == "remote") return std::make_unique<RemoteChatProvider>(config.remote);
  std::vector<ScriptedRule> rules;
  if (!config.rules.empty()) rules = ScriptedProvider::load_rules(config.rules);
  if (config.default_response) return std::make_unique<ScriptedProvider>(std::move(rules), *config.default_response);
  return std::make_unique<ScriptedProvider>(std::move(rules));
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingConfig& config) {
  if (config.kind == "remote") return std::make_unique<RemoteEmbedder>(config.remote);
  return std::make_unique<HashingEmbedder>();
}

SeverityStandard load_severity_standard(const std::filesystem::path& path) {
  if (path.empty()) return SeverityStandard::hamd_default();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open severity standard " + path.string());
  try {
    return Json::parse(in).get<SeverityStandard>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

PromptLibrary load_prompt_library(const AppConfig& config) {
  if (!config.template_dir.empty()) return PromptLibrary::load(config.template_dir, config.prompt_locale);
  if (config.prompt_locale != PromptLibrary::builtin().locale()) {
    throw FieldError("template_dir", "locale " + config.prompt_locale + " needs a template_dir");
  }
  return PromptLibrary::builtin();
}

Runtime::Runtime(AppConfig cfg, Clock clock)
    : config(std::move(cfg)),
      chat(make_chat_provider(config.gateway)),
      embedder(make_embedder(config.embedding)),
      library(load_prompt_library(config)) {
  if (!config.storage_dir.empty()) std::filesystem::create_directories(config.storage_dir);
  pipeline = std::make_unique<ReportPipeline>(*chat, *embedder, load_corpus(config.corpus_path),
                                              load_severity_standard(config.severity_standard_path), config.pipeline,
                                              library, clock);
  ServiceOptions options;
  options.storage_dir = config.storage_dir;
  options.clock = clock;
  options.token_key = config.token_secret;
  options.cyclical = config.cyclical;
  options.chat_params = config.gateway.params;
  service = std::make_unique<AssessmentService>(config.accounts, *pipeline, *chat, std::move(options));
}

}  // namespace cadence
