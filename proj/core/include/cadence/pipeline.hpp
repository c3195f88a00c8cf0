#pragma once

// Dialogue -> criteria retrieval -> prompt -> model -> validated report, plus
// advice generation and the windowed cyclical summary.

#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadence/domain.hpp"
#include "cadence/gateway.hpp"
#include "cadence/prompts.hpp"
#include "cadence/retrieval.hpp"

namespace cadence {

struct PipelineConfig {
  PromptOptions prompt_options;
  bool include_family_content_in_retrieval = false;
  std::string corpus_id;  // empty: accept whatever corpus is supplied
  std::string std_id;     // empty: accept whatever standard is supplied
  /// Used for advice and narratives. Reports take timeout, retries and
  /// backoff from here but keep the fixed report sampling settings.
  CompletionParams chat_params;
};

using Clock = std::function<Timestamp()>;
Timestamp system_now();

struct GenerationResult {
  DiagnosticReport report;
  PromptBundle prompt;
  std::optional<RetrievalResult> retrieval;
  std::string raw_output;
  int rounds = 1;
};

/// Score shown on the cyclical chart: no interaction 0, then 25/50/75/100
/// from normal to severe.
int severity_score(std::optional<SeverityDegree> severity);

struct DatedReport {
  Date day{};
  DiagnosticReport report;
  Timestamp released_at = 0;
};

struct InteractionLog {
  std::vector<Timestamp> logins;
  std::vector<Timestamp> user_turns;
};

struct DailyScore {
  Date day{};
  int score = 0;

  friend bool operator==(const DailyScore&, const DailyScore&) = default;
};

struct CyclicalOptions {
  /// Average only over days with a report instead of every day in the window.
  bool exclude_empty_days = false;
};

struct CyclicalSummary {
  DateRange window;
  std::size_t login_count = 0;
  std::size_t user_turn_count = 0;
  std::vector<DailyScore> daily_scores;
  std::map<SeverityDegree, std::size_t> distribution;  // only degrees that occur
  double average_score = 0.0;
  std::string narrative;
  bool narrative_available = true;
};

inline constexpr std::string_view kNoDataNarrative = "No assessments were recorded in this period.";

/// Numeric part of the cyclical summary: per-day scores from the latest
/// released report of each day, distribution, counters and average.
CyclicalSummary summarize_window(std::span<const DatedReport> reports, const InteractionLog& log,
                                 const DateRange& window, const CyclicalOptions& options = {});

class ReportPipeline {
 public:
  ReportPipeline(ChatProvider& chat, EmbeddingProvider& embedder, CriteriaCorpus corpus,
                 SeverityStandard standard, PipelineConfig config,
                 const PromptLibrary& library = PromptLibrary::builtin(), Clock clock = system_now);

  /// At least one of patient/family must be given. The family-only case is
  /// allowed; retrieval then runs on the family member's content.
  GenerationResult generate(const Dialogue* patient, const Dialogue* family) const;

  DiagnosticReport generate_report(const Dialogue& patient,
                                   const std::optional<Dialogue>& family = std::nullopt) const;

  Advice generate_advice(const DiagnosticReport& report, Role audience) const;

  CyclicalSummary cyclical_analysis(std::span<const DatedReport> reports, const InteractionLog& log,
                                    const DateRange& window,
                                    const CyclicalOptions& options = {}) const;

  const PipelineConfig& config() const noexcept { return config_; }
  const CriteriaCorpus& corpus() const noexcept { return corpus_; }
  const SeverityStandard& standard() const noexcept { return standard_; }
  const PromptLibrary& library() const noexcept { return library_; }

 private:
  ChatProvider& chat_;
  EmbeddingProvider& embedder_;
  CriteriaCorpus corpus_;
  SeverityStandard standard_;
  PipelineConfig config_;
  const PromptLibrary& library_;
  Clock clock_;
};

/// Deduplicates concurrent work per key: the first caller runs fn, callers
/// arriving while it runs wait for and share its result (or exception).
template <typename Key, typename Value>
class SingleFlight {
 public:
  Value run(const Key& key, const std::function<Value()>& fn, bool* joined = nullptr) {
    std::unique_lock lock(mutex_);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto future = it->second;
      lock.unlock();
      if (joined) *joined = true;
      return future.get();
    }
    std::promise<Value> promise;
    inflight_.emplace(key, promise.get_future().share());
    lock.unlock();
    if (joined) *joined = false;
    try {
      Value value = fn();
      promise.set_value(value);
      erase(key);
      return value;
    } catch (...) {
      promise.set_exception(std::current_exception());
      erase(key);
      throw;
    }
  }

  std::size_t in_flight() const {
    std::lock_guard lock(mutex_);
    return inflight_.size();
  }

 private:
  void erase(const Key& key) {
    std::lock_guard lock(mutex_);
    inflight_.erase(key);
  }

  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<Value>> inflight_;
};

}  // namespace cadence
