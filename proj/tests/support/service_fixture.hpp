#pragma once

// In-process service wired to the scripted provider and the sample data.

#include <atomic>
#include <filesystem>
#include <memory>

#include "cadence/service.hpp"

namespace cadence::testkit {

inline std::filesystem::path sample_data(const char* name) {
  return std::filesystem::path(CADENCE_DATA_DIR) / name;
}

/// 2026-03-02 09:00 UTC.
inline constexpr Timestamp kMorning = 1772442000;

inline std::vector<Account> sample_accounts() {
  return {
      {"alice", Role::kPatient, "Alice", {}, "alice-pw"},
      {"carol", Role::kPatient, "Carol", {}, "carol-pw"},
      {"bob", Role::kFamily, "Bob", {"alice"}, "bob-pw"},
      {"dr-chen", Role::kDoctor, "Dr Chen", {"alice", "carol"}, "chen-pw"},
      {"dr-ito", Role::kDoctor, "Dr Ito", {"carol"}, "ito-pw"},
  };
}

struct ServiceRig {
  explicit ServiceRig(std::filesystem::path storage = {}, std::vector<ScriptedRule> extra_rules = {})
      : chat([&] {
          auto rules = std::move(extra_rules);
          for (auto& r : ScriptedProvider::load_rules(sample_data("rules.jsonl"))) rules.push_back(std::move(r));
          return rules;
        }()),
        pipeline(chat, embedder, load_corpus(sample_data("criteria_en.jsonl")), SeverityStandard::hamd_default(),
                 PipelineConfig{}, PromptLibrary::builtin(), [this] { return now.load(); }) {
    ServiceOptions options;
    options.storage_dir = std::move(storage);
    options.clock = [this] { return now.load(); };
    options.token_key = "test-key";
    service = std::make_unique<AssessmentService>(sample_accounts(), pipeline, chat, options);
  }

  /// One closed session with the given user lines; returns the report id.
  std::string converse(const std::string& account, const std::vector<std::string>& lines) {
    const Session s = service->open_session(account);
    for (const auto& line : lines) {
      now += 30;
      service->post_turn(account, s.id, line);
    }
    now += 30;
    const auto job = service->close_session(account, s.id);
    return service->wait_job(*job);
  }

  std::atomic<Timestamp> now{kMorning};
  ScriptedProvider chat;
  HashingEmbedder embedder;
  ReportPipeline pipeline;
  std::unique_ptr<AssessmentService> service;
};

}  // namespace cadence::testkit
