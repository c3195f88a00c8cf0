#pragma once

// Multi-role assessment service: chat sessions for patients and family
// members, asynchronous draft generation, doctor revision and release,
// role-filtered timelines, feedback and cyclical summaries. State is
// rebuilt from an append-only event log.

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cadence/auth.hpp"
#include "cadence/domain.hpp"
#include "cadence/event_log.hpp"
#include "cadence/gateway.hpp"
#include "cadence/pipeline.hpp"

namespace cadence {

struct Account {
  std::string id;
  Role role = Role::kPatient;
  std::string display_name;
  /// Family: the one patient they care for. Doctor: assigned patients.
  /// Patient: unused (the account id is the patient id).
  std::vector<std::string> patient_ids;
  std::string secret;
};

struct Session {
  std::string id;
  std::string account_id;
  std::string patient_id;
  Role subject_role = Role::kPatient;
  Timestamp started_at = 0;
  std::vector<Turn> turns;
  bool closed = false;

  Dialogue to_dialogue() const;
};

enum class ReviewState { kDraft, kReleased };
std::string_view to_string(ReviewState state);

struct Revision {
  std::string doctor_id;
  Timestamp at = 0;
  Json edits;
};

struct ReviewRecord {
  std::string report_id;
  ReviewState state = ReviewState::kDraft;
  std::vector<Revision> revisions;
  std::optional<Timestamp> released_at;
  std::optional<std::string> released_by;
};

struct FeedbackEntry {
  std::string id;
  std::string report_id;
  std::string author_id;
  Role author_role = Role::kPatient;
  std::string text;
  Timestamp created_at = 0;
};

struct PatientSummary {
  std::string patient_id;
  std::string display_name;
  std::optional<Timestamp> last_login;
  std::optional<std::pair<BinaryClass, SeverityDegree>> latest_status;
};

struct StoredReport {
  DiagnosticReport report;
  std::string patient_id;
  Date day{};
  std::vector<Advice> advice;  // one TreatmentStrategy, one CareAdvice
  ReviewRecord review;
  bool partial_information = false;  // drafted without the patient's dialogue
  std::optional<std::string> superseded_by;
};

struct TimelineEntry {
  Date day{};
  Timestamp at = 0;
  std::string kind;  // dialogue | report | advice | revision | feedback
  std::string id;
  Json payload;
};

enum class JobState { kPending, kDone, kFailed };

struct JobStatus {
  std::string id;
  JobState state = JobState::kPending;
  std::optional<std::string> report_id;
  std::optional<std::string> error;
};

struct ServiceOptions {
  std::filesystem::path storage_dir;  // empty: in-memory only
  Clock clock = system_now;
  std::string token_key;              // empty: random per process
  CyclicalOptions cyclical;
  CompletionParams chat_params;
};

class AssessmentService {
 public:
  AssessmentService(std::vector<Account> accounts, ReportPipeline& pipeline, ChatProvider& chat,
                    ServiceOptions options = {});
  ~AssessmentService();

  AssessmentService(const AssessmentService&) = delete;
  AssessmentService& operator=(const AssessmentService&) = delete;

  // Authentication.
  std::string login(const std::string& account_id, const std::string& secret) const;
  const Account& authenticate(std::string_view bearer_token) const;
  const Account& account(const std::string& account_id) const;

  // Chat.
  Session open_session(const std::string& account_id);
  /// Appends the user turn and returns the counsellor's reply. If the
  /// previous user turn never got a reply, posting the same text again
  /// retries the reply instead of appending a duplicate.
  Turn post_turn(const std::string& account_id, const std::string& session_id, const std::string& text);
  /// Closes the session and schedules a draft for (patient, day). Returns
  /// the job id, or nullopt when the session was already closed or empty.
  std::optional<std::string> close_session(const std::string& account_id, const std::string& session_id);
  Session session(const std::string& requester_id, const std::string& session_id) const;

  JobStatus job_status(const std::string& job_id) const;
  /// Blocks until the job finishes; returns the report id or rethrows.
  std::string wait_job(const std::string& job_id);
  void wait_all_jobs();

  // Review workflow.
  ReviewRecord revise_report(const std::string& doctor_id, const std::string& report_id, const Json& edits);
  ReviewRecord release_report(const std::string& doctor_id, const std::string& report_id);
  FeedbackEntry submit_feedback(const std::string& account_id, const std::string& report_id,
                                const std::string& text);

  // Views.
  std::vector<TimelineEntry> get_timeline(const std::string& patient_id, const std::string& requester_id) const;
  std::vector<PatientSummary> list_patients(const std::string& doctor_id) const;
  /// Report as the requester may see it; drafts only for doctors.
  Json get_report(const std::string& report_id, const std::string& requester_id) const;
  CyclicalSummary cyclical(const std::string& patient_id, const std::string& requester_id,
                           const DateRange& window) const;

  /// Copy of a stored report for inspection.
  StoredReport stored_report(const std::string& report_id) const;

 private:
  struct State;

  /// Builds an event from the current state under the exclusive lock, then
  /// appends and applies it. build may throw to abort without writing.
  Json commit(const std::function<Json(const State&)>& build);
  void apply(const Json& event);
  void require_patient_access(const Account& requester, const std::string& patient_id) const;
  std::string run_draft_job(const std::string& patient_id, Date day);
  Json report_view(const StoredReport& stored, const Account& viewer) const;

  std::map<std::string, Account> accounts_;
  ReportPipeline& pipeline_;
  ChatProvider& chat_;
  ServiceOptions options_;
  TokenSigner signer_;
  EventLog log_;

  mutable std::shared_mutex state_mutex_;
  std::unique_ptr<State> state_;

  SingleFlight<std::pair<std::string, std::string>, std::string> drafts_in_flight_;
  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_future<std::string>> jobs_;
  std::size_t next_job_ = 1;
};

Json to_json(const Session& session);
Json to_json(const ReviewRecord& review);
Json to_json(const FeedbackEntry& entry);
Json to_json(const PatientSummary& summary);
Json to_json(const TimelineEntry& entry);
Json to_json(const CyclicalSummary& summary);
Json to_json(const JobStatus& status);

}  // namespace cadence
