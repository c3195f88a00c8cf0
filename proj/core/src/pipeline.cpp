#include "cadence/pipeline.hpp"

#include <chrono>
#include <cstdio>

namespace cadence {

namespace {

CompletionParams report_params(const CompletionParams& base) {
  CompletionParams params = CompletionParams::for_reports();
  params.timeout_ms = base.timeout_ms;
  params.retries = base.retries;
  params.backoff_ms = base.backoff_ms;
  return params;
}

std::string report_id_for(const std::vector<std::string>& dialogue_ids, Timestamp created_at) {
  std::uint64_t hash = 14695981039346656037ull;
  auto mix = [&](std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
  };
  for (const auto& id : dialogue_ids) {
    mix(id);
    mix("|");
  }
  mix(std::to_string(created_at));
  char buf[24];
  std::snprintf(buf, sizeof buf, "rpt-%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void require_dialogue(const Dialogue& d, Role expected) {
  auto violations = validate_dialogue(d);
  if (d.subject_role != expected) {
    violations.push_back({"subject_role", "expected a " + std::string(to_string(expected)) + " dialogue"});
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

// Latest release per day within the window; ties keep the later entry.
std::map<Date, const DatedReport*> latest_per_day(std::span<const DatedReport> reports,
                                                  const DateRange& window) {
  std::map<Date, const DatedReport*> latest;
  for (const auto& r : reports) {
    if (!window.contains(r.day)) continue;
    auto [it, inserted] = latest.emplace(r.day, &r);
    if (!inserted && r.released_at >= it->second->released_at) it->second = &r;
  }
  return latest;
}

}  // namespace

Timestamp system_now() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

int severity_score(std::optional<SeverityDegree> severity) {
  if (!severity) return 0;
  switch (*severity) {
    case SeverityDegree::kNormal: return 25;
    case SeverityDegree::kMild: return 50;
    case SeverityDegree::kModerate: return 75;
    case SeverityDegree::kSevere: return 100;
  }
  return 0;
}

CyclicalSummary summarize_window(std::span<const DatedReport> reports, const InteractionLog& log,
                                 const DateRange& window, const CyclicalOptions& options) {
  if (window.to < window.from) throw Error(ErrorCode::kDomain, "window is empty");
  CyclicalSummary summary;
  summary.window = window;

  const auto latest = latest_per_day(reports, window);

  double total = 0.0;
  std::size_t counted = 0;
  for (const Date day : window.days()) {
    std::optional<SeverityDegree> severity;
    if (auto it = latest.find(day); it != latest.end()) {
      severity = it->second->report.severity;
      ++summary.distribution[*severity];
    }
    const int score = severity_score(severity);
    summary.daily_scores.push_back({day, score});
    if (severity || !options.exclude_empty_days) {
      total += score;
      ++counted;
    }
  }
  summary.average_score = counted ? total / static_cast<double>(counted) : 0.0;

  const Timestamp begin = start_of(window.from);
  const Timestamp end = start_of(Date{std::chrono::sys_days{window.to} + std::chrono::days{1}});
  auto in_window = [&](Timestamp t) { return t >= begin && t < end; };
  for (Timestamp t : log.logins) summary.login_count += in_window(t);
  for (Timestamp t : log.user_turns) summary.user_turn_count += in_window(t);
  return summary;
}

ReportPipeline::ReportPipeline(ChatProvider& chat, EmbeddingProvider& embedder, CriteriaCorpus corpus,
                               SeverityStandard standard, PipelineConfig config,
                               const PromptLibrary& library, Clock clock)
    : chat_(chat),
      embedder_(embedder),
      corpus_(std::move(corpus)),
      standard_(std::move(standard)),
      config_(std::move(config)),
      library_(library),
      clock_(std::move(clock)) {
  if (!config_.corpus_id.empty() && config_.corpus_id != corpus_.source_id) {
    throw Error(ErrorCode::kInvalidArgument, "pipeline expects corpus \"" + config_.corpus_id +
                                                 "\" but got \"" + corpus_.source_id + "\"");
  }
  if (!config_.std_id.empty() && config_.std_id != standard_.id) {
    throw Error(ErrorCode::kInvalidArgument, "pipeline expects severity standard \"" +
                                                 config_.std_id + "\" but got \"" + standard_.id + "\"");
  }
  if (config_.prompt_options.use_rag && corpus_.documents.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "retrieval is enabled but the criteria corpus is empty");
  }
  if (!clock_) clock_ = system_now;
}

GenerationResult ReportPipeline::generate(const Dialogue* patient, const Dialogue* family) const {
  if (!patient && !family) throw Error(ErrorCode::kDomain, "no dialogue to assess");
  if (patient) require_dialogue(*patient, Role::kPatient);
  if (family) require_dialogue(*family, Role::kFamily);

  std::vector<Dialogue> dialogues;
  if (patient) dialogues.push_back(*patient);
  if (family) dialogues.push_back(*family);

  GenerationResult result;
  const PromptOptions& options = config_.prompt_options;
  if (options.use_rag) {
    std::string content;
    if (patient) content = extract_user_content(*patient);
    if (family && (!patient || config_.include_family_content_in_retrieval)) {
      if (!content.empty()) content.push_back('\n');
      content += extract_user_content(*family);
    }
    result.retrieval = retrieve_criteria(content, corpus_, embedder_);
  }
  result.prompt = build_inference_prompt(dialogues, options,
                                         result.retrieval ? &result.retrieval->document : nullptr,
                                         library_);
  ReportReply reply = request_report(result.prompt.rendered, chat_, report_params(config_.chat_params),
                                     library_.get("corrective_json"));
  result.raw_output = std::move(reply.raw);
  result.rounds = reply.rounds;
  result.report = std::move(reply.report);
  result.report.dialogue_ids.clear();
  for (const auto& d : dialogues) result.report.dialogue_ids.push_back(d.id);
  result.report.created_at = clock_();
  result.report.id = report_id_for(result.report.dialogue_ids, result.report.created_at);
  return result;
}

DiagnosticReport ReportPipeline::generate_report(const Dialogue& patient,
                                                 const std::optional<Dialogue>& family) const {
  return generate(&patient, family ? &*family : nullptr).report;
}

Advice ReportPipeline::generate_advice(const DiagnosticReport& report, Role audience) const {
  auto violations = validate_report(report);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  const PromptBundle prompt = build_advice_prompt(report, audience, library_);
  const std::vector<ChatMessage> messages{{ChatRole::kUser, prompt.rendered}};
  return {advice_kind_for(audience), report.id, complete_chat(messages, config_.chat_params, chat_)};
}

CyclicalSummary ReportPipeline::cyclical_analysis(std::span<const DatedReport> reports,
                                                  const InteractionLog& log, const DateRange& window,
                                                  const CyclicalOptions& options) const {
  CyclicalSummary summary = summarize_window(reports, log, window, options);
  const auto latest = latest_per_day(reports, window);
  if (latest.empty()) {
    summary.narrative = std::string(kNoDataNarrative);
    return summary;
  }
  std::vector<DiagnosticReport> in_window;
  for (const auto& [day, r] : latest) in_window.push_back(r->report);
  try {
    const PromptBundle prompt = build_cyclical_prompt(in_window, window, library_);
    const std::vector<ChatMessage> messages{{ChatRole::kUser, prompt.rendered}};
    summary.narrative = complete_chat(messages, config_.chat_params, chat_);
  } catch (const Error&) {
    summary.narrative.clear();
    summary.narrative_available = false;
  }
  return summary;
}

}  // namespace cadence
