#include "cadence/service.hpp"

#include <algorithm>
#include <tuple>

#include "cadence/prompts.hpp"
#include "cadence/serialization.hpp"

namespace cadence {

namespace {

constexpr std::string_view kEditableFields[] = {
    "binary_class", "severity_degree", "subtype_category", "narrative",
    "findings",     "treatment_strategy", "care_advice",
};

Error not_found(const std::string& what, const std::string& id) {
  return Error(ErrorCode::kNotFound, what + " not found: " + id);
}

Json to_json_value(const Turn& turn) {
  Json j;
  to_json(j, turn);
  return j;
}

Date read_date(const Json& j) {
  auto parsed = parse_date(j.get<std::string>());
  if (!parsed) throw Error(ErrorCode::kParse, "bad date in event log: " + j.dump());
  return *parsed;
}

std::size_t user_turns(const Session& session) {
  return static_cast<std::size_t>(std::count_if(session.turns.begin(), session.turns.end(),
                                                [](const Turn& t) { return t.speaker == Speaker::kUser; }));
}

bool contains(const std::vector<std::string>& ids, const std::string& id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

int kind_rank(const std::string& kind) {
  if (kind == "dialogue") return 0;
  if (kind == "report") return 1;
  if (kind == "advice") return 2;
  if (kind == "revision") return 3;
  return 4;
}

}  // namespace

Dialogue Session::to_dialogue() const {
  Dialogue d;
  d.id = id;
  d.subject_role = subject_role;
  d.turns = turns;
  d.day = date_of(started_at);
  return d;
}

std::string_view to_string(ReviewState state) {
  return state == ReviewState::kDraft ? "draft" : "released";
}

struct AssessmentService::State {
  std::map<std::string, Session> sessions;
  std::map<std::string, StoredReport> reports;
  std::vector<FeedbackEntry> feedback;
  std::vector<Json> draft_failures;

  const Session& session(const std::string& id) const {
    auto it = sessions.find(id);
    if (it == sessions.end()) throw not_found("session", id);
    return it->second;
  }

  const StoredReport& report(const std::string& id) const {
    auto it = reports.find(id);
    if (it == reports.end()) throw not_found("report", id);
    return it->second;
  }
};

AssessmentService::AssessmentService(std::vector<Account> accounts, ReportPipeline& pipeline,
                                     ChatProvider& chat, ServiceOptions options)
    : pipeline_(pipeline),
      chat_(chat),
      options_(std::move(options)),
      signer_(options_.token_key),
      log_(options_.storage_dir),
      state_(std::make_unique<State>()) {
  for (auto& account : accounts) {
    if (account.id.empty()) throw Error(ErrorCode::kInvalidArgument, "account id must not be empty");
    std::string id = account.id;
    if (!accounts_.emplace(id, std::move(account)).second) {
      throw Error(ErrorCode::kConflict, "duplicate account id: " + id);
    }
  }
  for (const auto& [id, account] : accounts_) {
    if (account.role == Role::kFamily && account.patient_ids.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "family account " + id + " must name exactly one patient");
    }
    if (account.role == Role::kPatient) continue;
    for (const auto& patient : account.patient_ids) {
      auto it = accounts_.find(patient);
      if (it == accounts_.end() || it->second.role != Role::kPatient) {
        throw Error(ErrorCode::kInvalidArgument, "account " + id + " refers to unknown patient " + patient);
      }
    }
  }
  if (!options_.clock) options_.clock = system_now;
  // TODO: re-queue drafts for sessions closed before a restart whose job never finished.
  log_.replay([this](const Json& event) { apply(event); });
}

AssessmentService::~AssessmentService() { wait_all_jobs(); }

// ---------------------------------------------------------------------------
// Authentication

std::string AssessmentService::login(const std::string& account_id, const std::string& secret) const {
  auto it = accounts_.find(account_id);
  if (it == accounts_.end() || !secrets_equal(it->second.secret, secret)) {
    throw Error(ErrorCode::kUnauthorized, "invalid credentials");
  }
  return signer_.sign({it->second.id, it->second.role});
}

const Account& AssessmentService::authenticate(std::string_view bearer_token) const {
  auto claims = signer_.verify(bearer_token);
  if (!claims) throw Error(ErrorCode::kUnauthorized, "invalid or missing token");
  auto it = accounts_.find(claims->account_id);
  if (it == accounts_.end() || it->second.role != claims->role) {
    throw Error(ErrorCode::kUnauthorized, "invalid or missing token");
  }
  return it->second;
}

const Account& AssessmentService::account(const std::string& account_id) const {
  auto it = accounts_.find(account_id);
  if (it == accounts_.end()) throw not_found("account", account_id);
  return it->second;
}

void AssessmentService::require_patient_access(const Account& requester, const std::string& patient_id) const {
  auto it = accounts_.find(patient_id);
  if (it == accounts_.end() || it->second.role != Role::kPatient) throw not_found("patient", patient_id);
  const bool allowed = requester.role == Role::kPatient ? requester.id == patient_id
                                                        : contains(requester.patient_ids, patient_id);
  if (!allowed) throw Error(ErrorCode::kForbidden, requester.id + " has no access to patient " + patient_id);
}

// ---------------------------------------------------------------------------
// Event log

Json AssessmentService::commit(const std::function<Json(const State&)>& build) {
  std::unique_lock lock(state_mutex_);
  Json event = build(*state_);
  log_.append(event);
  apply(event);
  return event;
}

void AssessmentService::apply(const Json& event) {
  State& s = *state_;
  const std::string type = event.at("type").get<std::string>();
  if (type == "session_opened") {
    Session session;
    session.id = event.at("session").get<std::string>();
    session.account_id = event.at("account").get<std::string>();
    session.patient_id = event.at("patient").get<std::string>();
    session.subject_role = parse_role(event.at("role").get<std::string>()).value();
    session.started_at = event.at("at").get<Timestamp>();
    s.sessions[session.id] = std::move(session);
  } else if (type == "turn") {
    s.sessions.at(event.at("session").get<std::string>()).turns.push_back(event.at("turn").get<Turn>());
  } else if (type == "session_closed") {
    s.sessions.at(event.at("session").get<std::string>()).closed = true;
  } else if (type == "draft") {
    StoredReport stored;
    stored.report = report_from_json(event.at("report"));
    stored.patient_id = event.at("patient").get<std::string>();
    stored.day = read_date(event.at("day"));
    stored.advice = event.at("advice").get<std::vector<Advice>>();
    stored.partial_information = event.at("partial_information").get<bool>();
    stored.review.report_id = stored.report.id;
    for (const auto& old : event.at("supersedes")) {
      s.reports.at(old.get<std::string>()).superseded_by = stored.report.id;
    }
    s.reports[stored.report.id] = std::move(stored);
  } else if (type == "draft_failed") {
    s.draft_failures.push_back(event);
  } else if (type == "revision") {
    StoredReport& stored = s.reports.at(event.at("report_id").get<std::string>());
    stored.report = report_from_json(event.at("report"));
    stored.advice = event.at("advice").get<std::vector<Advice>>();
    stored.review.revisions.push_back(
        {event.at("doctor").get<std::string>(), event.at("at").get<Timestamp>(), event.at("edits")});
  } else if (type == "release") {
    StoredReport& stored = s.reports.at(event.at("report_id").get<std::string>());
    stored.review.state = ReviewState::kReleased;
    stored.review.released_at = event.at("at").get<Timestamp>();
    stored.review.released_by = event.at("doctor").get<std::string>();
  } else if (type == "feedback") {
    FeedbackEntry entry;
    entry.id = event.at("id").get<std::string>();
    entry.report_id = event.at("report_id").get<std::string>();
    entry.author_id = event.at("author").get<std::string>();
    entry.author_role = parse_role(event.at("role").get<std::string>()).value();
    entry.text = event.at("text").get<std::string>();
    entry.created_at = event.at("at").get<Timestamp>();
    s.feedback.push_back(std::move(entry));
  } else {
    throw Error(ErrorCode::kParse, "unknown event type: " + type);
  }
}

// ---------------------------------------------------------------------------
// Chat

Session AssessmentService::open_session(const std::string& account_id) {
  const Account& acc = account(account_id);
  if (acc.role == Role::kDoctor) throw Error(ErrorCode::kForbidden, "doctors do not hold chat sessions");
  const std::string patient = acc.role == Role::kPatient ? acc.id : acc.patient_ids.front();
  const Timestamp now = options_.clock();
  Json event = commit([&](const State& s) {
    return Json{{"type", "session_opened"},
                {"session", "ses-" + std::to_string(s.sessions.size() + 1)},
                {"account", acc.id},
                {"patient", patient},
                {"role", to_string(acc.role)},
                {"at", now}};
  });
  std::shared_lock lock(state_mutex_);
  return state_->session(event.at("session").get<std::string>());
}

Turn AssessmentService::post_turn(const std::string& account_id, const std::string& session_id,
                                  const std::string& text) {
  if (is_blank(text)) throw Error(ErrorCode::kInvalidArgument, "turn text must not be blank");

  auto check_open = [&](const State& s) -> const Session& {
    const Session& session = s.session(session_id);
    if (session.account_id != account_id) {
      throw Error(ErrorCode::kForbidden, "session belongs to another account");
    }
    if (session.closed) throw Error(ErrorCode::kConflict, "session is closed");
    return session;
  };

  bool retry = false;
  {
    std::shared_lock lock(state_mutex_);
    const Session& session = check_open(*state_);
    if (!session.turns.empty() && session.turns.back().speaker == Speaker::kUser) {
      if (session.turns.back().text != text) {
        throw Error(ErrorCode::kConflict, "the previous turn is still awaiting a reply");
      }
      retry = true;
    }
  }
  if (!retry) {
    commit([&](const State& s) {
      const Session& session = check_open(s);
      if (!session.turns.empty() && session.turns.back().speaker == Speaker::kUser) {
        throw Error(ErrorCode::kConflict, "the previous turn is still awaiting a reply");
      }
      Timestamp at = options_.clock();
      if (!session.turns.empty()) at = std::max(at, session.turns.back().at);
      return Json{{"type", "turn"}, {"session", session_id}, {"turn", to_json_value(Turn{Speaker::kUser, text, at})}};
    });
  }

  std::vector<ChatMessage> messages;
  {
    std::shared_lock lock(state_mutex_);
    const Session& session = check_open(*state_);
    const PromptBundle persona = build_counselor_persona(session.subject_role, pipeline_.config().prompt_options,
                                                         pipeline_.library());
    messages.push_back({ChatRole::kSystem, persona.rendered});
    for (const auto& turn : session.turns) {
      messages.push_back({turn.speaker == Speaker::kUser ? ChatRole::kUser : ChatRole::kAssistant, turn.text});
    }
  }
  const std::string reply = complete_chat(messages, options_.chat_params, chat_);
  if (is_blank(reply)) throw Error(ErrorCode::kProvider, "the model returned an empty reply");

  Json event = commit([&](const State& s) {
    const Session& session = check_open(s);
    if (session.turns.empty() || session.turns.back().speaker != Speaker::kUser ||
        session.turns.back().text != text) {
      throw Error(ErrorCode::kConflict, "the session changed while the reply was generated");
    }
    const Timestamp at = std::max(options_.clock(), session.turns.back().at);
    return Json{{"type", "turn"}, {"session", session_id}, {"turn", to_json_value(Turn{Speaker::kAssistant, reply, at})}};
  });
  return event.at("turn").get<Turn>();
}

std::optional<std::string> AssessmentService::close_session(const std::string& account_id,
                                                            const std::string& session_id) {
  bool closed_now = false;
  std::string patient;
  Date day{};
  {
    std::unique_lock lock(state_mutex_);
    const Session& session = state_->session(session_id);
    if (session.account_id != account_id) {
      throw Error(ErrorCode::kForbidden, "session belongs to another account");
    }
    if (!session.closed) {
      Json event{{"type", "session_closed"}, {"session", session_id}, {"at", options_.clock()}};
      log_.append(event);
      apply(event);
      closed_now = user_turns(session) > 0;
      patient = session.patient_id;
      day = date_of(session.started_at);
    }
  }
  if (!closed_now) return std::nullopt;

  std::lock_guard jobs_lock(jobs_mutex_);
  std::string job_id = "job-" + std::to_string(next_job_++);
  auto key = std::make_pair(patient, format_date(day));
  jobs_.emplace(job_id, std::async(std::launch::async, [this, key, patient, day, session_id] {
                          for (;;) {
                            bool joined = false;
                            std::string report_id = drafts_in_flight_.run(
                                key, [&] { return run_draft_job(patient, day); }, &joined);
                            if (!joined) return report_id;
                            // A draft that was already running may predate this session.
                            std::shared_lock lock(state_mutex_);
                            if (contains(state_->report(report_id).report.dialogue_ids, session_id)) {
                              return report_id;
                            }
                          }
                        }).share());
  return job_id;
}

Session AssessmentService::session(const std::string& requester_id, const std::string& session_id) const {
  const Account& requester = account(requester_id);
  std::shared_lock lock(state_mutex_);
  const Session& s = state_->session(session_id);
  if (requester.role == Role::kDoctor) {
    require_patient_access(requester, s.patient_id);
  } else if (s.account_id != requester.id) {
    throw Error(ErrorCode::kForbidden, "session belongs to another account");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Draft jobs

std::string AssessmentService::run_draft_job(const std::string& patient_id, Date day) {
  std::optional<Dialogue> patient;
  std::optional<Dialogue> family;
  {
    std::shared_lock lock(state_mutex_);
    const Session* latest_patient = nullptr;
    const Session* latest_family = nullptr;
    for (const auto& [id, session] : state_->sessions) {
      if (session.patient_id != patient_id || !session.closed || user_turns(session) == 0 ||
          date_of(session.started_at) != day) {
        continue;
      }
      const Session*& slot = session.subject_role == Role::kPatient ? latest_patient : latest_family;
      // Ids are "ses-<n>", so the numeric suffix orders sessions opened in the same second.
      auto order = [](const Session* x) { return std::make_pair(x->started_at, std::stoll(x->id.substr(4))); };
      if (!slot || order(slot) < order(&session)) slot = &session;
    }
    if (latest_patient) patient = latest_patient->to_dialogue();
    if (latest_family) family = latest_family->to_dialogue();
  }
  if (!patient && !family) {
    throw Error(ErrorCode::kNotFound, "no closed session for " + patient_id + " on " + format_date(day));
  }

  GenerationResult result;
  std::vector<Advice> advice;
  try {
    result = pipeline_.generate(patient ? &*patient : nullptr, family ? &*family : nullptr);
    advice.push_back(pipeline_.generate_advice(result.report, Role::kPatient));
    advice.push_back(pipeline_.generate_advice(result.report, Role::kFamily));
  } catch (const std::exception& e) {
    commit([&](const State&) {
      return Json{{"type", "draft_failed"},
                  {"patient", patient_id},
                  {"day", format_date(day)},
                  {"error", e.what()},
                  {"at", options_.clock()}};
    });
    throw;
  }

  Json event = commit([&](const State& s) {
    DiagnosticReport report = result.report;
    report.id = "rpt-" + std::to_string(s.reports.size() + 1);
    report.created_at = options_.clock();
    Json supersedes = Json::array();
    for (const auto& [id, stored] : s.reports) {
      if (stored.patient_id == patient_id && stored.day == day && !stored.superseded_by &&
          stored.review.state == ReviewState::kDraft) {
        supersedes.push_back(id);
      }
    }
    for (auto& a : advice) a.report_id = report.id;
    return Json{{"type", "draft"},
                {"report", report},
                {"patient", patient_id},
                {"day", format_date(day)},
                {"advice", advice},
                {"partial_information", !patient.has_value()},
                {"supersedes", supersedes}};
  });
  return event.at("report").at("id").get<std::string>();
}

JobStatus AssessmentService::job_status(const std::string& job_id) const {
  std::shared_future<std::string> future;
  {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw not_found("job", job_id);
    future = it->second;
  }
  JobStatus status;
  status.id = job_id;
  if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return status;
  try {
    status.report_id = future.get();
    status.state = JobState::kDone;
  } catch (const std::exception& e) {
    status.state = JobState::kFailed;
    status.error = e.what();
  }
  return status;
}

std::string AssessmentService::wait_job(const std::string& job_id) {
  std::shared_future<std::string> future;
  {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw not_found("job", job_id);
    future = it->second;
  }
  return future.get();
}

void AssessmentService::wait_all_jobs() {
  std::vector<std::shared_future<std::string>> pending;
  {
    std::lock_guard lock(jobs_mutex_);
    for (const auto& [id, future] : jobs_) pending.push_back(future);
  }
  for (auto& future : pending) future.wait();
}

// ---------------------------------------------------------------------------
// Review workflow

ReviewRecord AssessmentService::revise_report(const std::string& doctor_id, const std::string& report_id,
                                              const Json& edits) {
  const Account& doctor = account(doctor_id);
  if (doctor.role != Role::kDoctor) throw Error(ErrorCode::kForbidden, "only doctors may revise reports");
  if (!edits.is_object() || edits.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "edits must be a non-empty JSON object");
  }
  for (const auto& [key, value] : edits.items()) {
    if (std::find(std::begin(kEditableFields), std::end(kEditableFields), key) == std::end(kEditableFields)) {
      throw Error(ErrorCode::kInvalidArgument, "field cannot be edited: " + key);
    }
  }

  commit([&](const State& s) {
    const StoredReport& stored = s.report(report_id);
    require_patient_access(doctor, stored.patient_id);
    if (stored.review.state == ReviewState::kReleased) {
      throw Error(ErrorCode::kConflict, "released reports cannot be revised");
    }
    if (stored.superseded_by) throw Error(ErrorCode::kConflict, "report was superseded by " + *stored.superseded_by);

    // Apply the edits to the model-facing body, then reread it strictly.
    Json body = report_body_json(stored.report);
    std::vector<Advice> advice = stored.advice;
    for (const auto& [key, value] : edits.items()) {
      if (key == "treatment_strategy" || key == "care_advice") {
        if (!value.is_string() || is_blank(value.get<std::string>())) {
          throw ValidationError({{key, "must be a non-empty string"}});
        }
        const AdviceKind kind = key == "treatment_strategy" ? AdviceKind::kTreatmentStrategy : AdviceKind::kCareAdvice;
        for (auto& a : advice) {
          if (a.kind == kind) a.text = value.get<std::string>();
        }
      } else if (key == "narrative" && value.is_null()) {
        body.erase("narrative");
      } else {
        body[key] = value;
      }
    }
    DiagnosticReport revised;
    try {
      revised = report_from_json(body);
    } catch (const FieldError& e) {
      std::vector<Violation> violations;
      for (const auto& field : e.fields()) violations.push_back({field, e.what()});
      throw ValidationError(std::move(violations));
    }
    revised.id = stored.report.id;
    revised.dialogue_ids = stored.report.dialogue_ids;
    revised.created_at = stored.report.created_at;
    if (auto violations = validate_report(revised); !violations.empty()) {
      throw ValidationError(std::move(violations));
    }
    return Json{{"type", "revision"},
                {"report_id", report_id},
                {"doctor", doctor_id},
                {"at", options_.clock()},
                {"edits", edits},
                {"report", revised},
                {"advice", advice}};
  });
  std::shared_lock lock(state_mutex_);
  return state_->report(report_id).review;
}

ReviewRecord AssessmentService::release_report(const std::string& doctor_id, const std::string& report_id) {
  const Account& doctor = account(doctor_id);
  if (doctor.role != Role::kDoctor) throw Error(ErrorCode::kForbidden, "only doctors may release reports");
  {
    std::shared_lock lock(state_mutex_);
    const StoredReport& stored = state_->report(report_id);
    require_patient_access(doctor, stored.patient_id);
    if (stored.review.state == ReviewState::kReleased) return stored.review;
  }
  commit([&](const State& s) {
    const StoredReport& stored = s.report(report_id);
    if (stored.review.state == ReviewState::kReleased) {
      throw Error(ErrorCode::kConflict, "report was released concurrently");
    }
    if (stored.superseded_by) throw Error(ErrorCode::kConflict, "report was superseded by " + *stored.superseded_by);
    return Json{{"type", "release"}, {"report_id", report_id}, {"doctor", doctor_id}, {"at", options_.clock()}};
  });
  std::shared_lock lock(state_mutex_);
  return state_->report(report_id).review;
}

FeedbackEntry AssessmentService::submit_feedback(const std::string& account_id, const std::string& report_id,
                                                 const std::string& text) {
  const Account& author = account(account_id);
  if (author.role == Role::kDoctor) throw Error(ErrorCode::kForbidden, "doctors do not submit feedback");
  if (is_blank(text)) throw Error(ErrorCode::kInvalidArgument, "feedback text must not be blank");
  Json event = commit([&](const State& s) {
    const StoredReport& stored = s.report(report_id);
    require_patient_access(author, stored.patient_id);
    if (stored.review.state != ReviewState::kReleased) throw not_found("report", report_id);
    return Json{{"type", "feedback"},
                {"id", "fb-" + std::to_string(s.feedback.size() + 1)},
                {"report_id", report_id},
                {"author", account_id},
                {"role", to_string(author.role)},
                {"text", text},
                {"at", options_.clock()}};
  });
  std::shared_lock lock(state_mutex_);
  const std::string id = event.at("id").get<std::string>();
  return *std::find_if(state_->feedback.begin(), state_->feedback.end(),
                       [&](const FeedbackEntry& f) { return f.id == id; });
}

// ---------------------------------------------------------------------------
// Views

Json AssessmentService::report_view(const StoredReport& stored, const Account& viewer) const {
  DiagnosticReport report = stored.report;
  if (viewer.role != Role::kDoctor) {
    // Evidence quoted from someone else's conversation stays with the doctor.
    std::vector<const Session*> own;
    for (const auto& id : report.dialogue_ids) {
      auto it = state_->sessions.find(id);
      if (it != state_->sessions.end() && it->second.account_id == viewer.id) own.push_back(&it->second);
    }
    for (auto& finding : report.findings) {
      if (finding.evidence.empty()) continue;
      const bool quoted_from_own = std::any_of(own.begin(), own.end(), [&](const Session* s) {
        return std::any_of(s->turns.begin(), s->turns.end(),
                           [&](const Turn& t) { return t.text.find(finding.evidence) != std::string::npos; });
      });
      if (!quoted_from_own) finding.evidence.clear();
    }
  }
  Json j = report;
  j["patient_id"] = stored.patient_id;
  j["day"] = format_date(stored.day);
  j["state"] = to_string(stored.review.state);
  j["partial_information"] = stored.partial_information;
  if (viewer.role == Role::kDoctor) {
    j["superseded_by"] = stored.superseded_by ? Json(*stored.superseded_by) : Json(nullptr);
    j["review"] = to_json(stored.review);
    j["advice"] = stored.advice;
  } else {
    const AdviceKind kind = advice_kind_for(viewer.role);
    Json advice = Json::array();
    for (const auto& a : stored.advice) {
      if (a.kind == kind) advice.push_back(a);
    }
    j["advice"] = advice;
    if (stored.review.released_at) j["released_at"] = *stored.review.released_at;
  }
  return j;
}

std::vector<TimelineEntry> AssessmentService::get_timeline(const std::string& patient_id,
                                                           const std::string& requester_id) const {
  const Account& viewer = account(requester_id);
  require_patient_access(viewer, patient_id);
  const bool doctor = viewer.role == Role::kDoctor;

  std::shared_lock lock(state_mutex_);
  std::vector<TimelineEntry> entries;
  for (const auto& [id, session] : state_->sessions) {
    if (session.patient_id != patient_id) continue;
    if (!doctor && session.account_id != viewer.id) continue;
    entries.push_back({date_of(session.started_at), session.started_at, "dialogue", id, to_json(session)});
  }
  for (const auto& [id, stored] : state_->reports) {
    if (stored.patient_id != patient_id) continue;
    const bool released = stored.review.state == ReviewState::kReleased;
    if (!doctor && !released) continue;
    const Timestamp at = released && !doctor ? *stored.review.released_at : stored.report.created_at;
    entries.push_back({stored.day, at, "report", id, report_view(stored, viewer)});
    for (const auto& advice : stored.advice) {
      if (!doctor && advice.kind != advice_kind_for(viewer.role)) continue;
      entries.push_back({stored.day, at, "advice", id + "/" + std::string(to_string(advice.kind)), advice});
    }
    if (doctor) {
      for (std::size_t i = 0; i < stored.review.revisions.size(); ++i) {
        const Revision& rev = stored.review.revisions[i];
        entries.push_back({date_of(rev.at), rev.at, "revision", id + "/r" + std::to_string(i + 1),
                           Json{{"report_id", id}, {"doctor_id", rev.doctor_id}, {"at", rev.at}, {"edits", rev.edits}}});
      }
    }
  }
  for (const auto& entry : state_->feedback) {
    const StoredReport& stored = state_->report(entry.report_id);
    if (stored.patient_id != patient_id) continue;
    if (!doctor && entry.author_id != viewer.id) continue;
    entries.push_back({date_of(entry.created_at), entry.created_at, "feedback", entry.id, to_json(entry)});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const TimelineEntry& a, const TimelineEntry& b) {
    return std::make_tuple(a.at, kind_rank(a.kind), a.id) < std::make_tuple(b.at, kind_rank(b.kind), b.id);
  });
  return entries;
}

std::vector<PatientSummary> AssessmentService::list_patients(const std::string& doctor_id) const {
  const Account& doctor = account(doctor_id);
  if (doctor.role != Role::kDoctor) throw Error(ErrorCode::kForbidden, "only doctors list patients");

  std::shared_lock lock(state_mutex_);
  std::vector<PatientSummary> out;
  for (const auto& patient_id : doctor.patient_ids) {
    PatientSummary summary;
    summary.patient_id = patient_id;
    summary.display_name = accounts_.at(patient_id).display_name;
    for (const auto& [id, session] : state_->sessions) {
      if (session.account_id == patient_id) {
        summary.last_login = std::max(summary.last_login.value_or(session.started_at), session.started_at);
      }
    }
    const StoredReport* newest = nullptr;
    for (const auto& [id, stored] : state_->reports) {
      if (stored.patient_id != patient_id || stored.review.state != ReviewState::kReleased) continue;
      auto order = [](const StoredReport* r) { return std::make_pair(r->day, *r->review.released_at); };
      if (!newest || order(newest) < order(&stored)) newest = &stored;
    }
    if (newest) summary.latest_status = std::make_pair(newest->report.binary_class, newest->report.severity);
    out.push_back(std::move(summary));
  }
  std::stable_sort(out.begin(), out.end(), [](const PatientSummary& a, const PatientSummary& b) {
    if (a.last_login != b.last_login) {
      if (!a.last_login) return false;
      if (!b.last_login) return true;
      return *a.last_login > *b.last_login;
    }
    return a.patient_id < b.patient_id;
  });
  return out;
}

Json AssessmentService::get_report(const std::string& report_id, const std::string& requester_id) const {
  const Account& viewer = account(requester_id);
  std::shared_lock lock(state_mutex_);
  const StoredReport& stored = state_->report(report_id);
  require_patient_access(viewer, stored.patient_id);
  if (viewer.role != Role::kDoctor && stored.review.state != ReviewState::kReleased) {
    throw not_found("report", report_id);
  }
  return report_view(stored, viewer);
}

CyclicalSummary AssessmentService::cyclical(const std::string& patient_id, const std::string& requester_id,
                                            const DateRange& window) const {
  const Account& viewer = account(requester_id);
  require_patient_access(viewer, patient_id);
  if (window.to < window.from) throw Error(ErrorCode::kInvalidArgument, "window ends before it starts");

  std::vector<DatedReport> reports;
  InteractionLog interactions;
  {
    std::shared_lock lock(state_mutex_);
    for (const auto& [id, stored] : state_->reports) {
      if (stored.patient_id == patient_id && stored.review.state == ReviewState::kReleased) {
        reports.push_back({stored.day, stored.report, *stored.review.released_at});
      }
    }
    for (const auto& [id, session] : state_->sessions) {
      if (session.account_id != patient_id) continue;
      interactions.logins.push_back(session.started_at);
      for (const auto& turn : session.turns) {
        if (turn.speaker == Speaker::kUser) interactions.user_turns.push_back(turn.at);
      }
    }
  }
  return pipeline_.cyclical_analysis(reports, interactions, window, options_.cyclical);
}

StoredReport AssessmentService::stored_report(const std::string& report_id) const {
  std::shared_lock lock(state_mutex_);
  return state_->report(report_id);
}

// ---------------------------------------------------------------------------
// Wire forms

Json to_json(const Session& session) {
  Json j{{"id", session.id},
         {"account_id", session.account_id},
         {"patient_id", session.patient_id},
         {"subject_role", to_string(session.subject_role)},
         {"started_at", session.started_at},
         {"day", format_date(date_of(session.started_at))},
         {"closed", session.closed}};
  j["turns"] = session.turns;
  return j;
}

Json to_json(const ReviewRecord& review) {
  Json revisions = Json::array();
  for (const auto& rev : review.revisions) {
    revisions.push_back({{"doctor_id", rev.doctor_id}, {"at", rev.at}, {"edits", rev.edits}});
  }
  return Json{{"report_id", review.report_id},
              {"state", to_string(review.state)},
              {"revisions", revisions},
              {"released_at", review.released_at ? Json(*review.released_at) : Json(nullptr)},
              {"released_by", review.released_by ? Json(*review.released_by) : Json(nullptr)}};
}

Json to_json(const FeedbackEntry& entry) {
  return Json{{"id", entry.id},
              {"report_id", entry.report_id},
              {"author_id", entry.author_id},
              {"author_role", to_string(entry.author_role)},
              {"text", entry.text},
              {"created_at", entry.created_at}};
}

Json to_json(const PatientSummary& summary) {
  Json j{{"patient_id", summary.patient_id}, {"display_name", summary.display_name}};
  j["last_login"] = summary.last_login ? Json(*summary.last_login) : Json(nullptr);
  if (summary.latest_status) {
    j["latest_status"] = {{"binary_class", to_string(summary.latest_status->first)},
                          {"severity_degree", to_string(summary.latest_status->second)}};
  } else {
    j["latest_status"] = nullptr;
  }
  return j;
}

Json to_json(const TimelineEntry& entry) {
  return Json{{"day", format_date(entry.day)}, {"at", entry.at}, {"kind", entry.kind}, {"id", entry.id},
              {"payload", entry.payload}};
}

Json to_json(const CyclicalSummary& summary) {
  Json scores = Json::array();
  for (const auto& s : summary.daily_scores) scores.push_back({{"day", format_date(s.day)}, {"score", s.score}});
  Json distribution = Json::object();
  for (const auto& [degree, count] : summary.distribution) distribution[std::string(to_string(degree))] = count;
  return Json{{"from", format_date(summary.window.from)},
              {"to", format_date(summary.window.to)},
              {"login_count", summary.login_count},
              {"user_turn_count", summary.user_turn_count},
              {"daily_scores", scores},
              {"distribution", distribution},
              {"average_score", summary.average_score},
              {"narrative", summary.narrative},
              {"narrative_available", summary.narrative_available}};
}

Json to_json(const JobStatus& status) {
  static constexpr std::string_view kNames[] = {"pending", "done", "failed"};
  Json j{{"id", status.id}, {"state", kNames[static_cast<int>(status.state)]}};
  j["report_id"] = status.report_id ? Json(*status.report_id) : Json(nullptr);
  if (status.error) j["error"] = *status.error;
  return j;
}

}  // namespace cadence
