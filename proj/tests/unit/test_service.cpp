#include <gtest/gtest.h>

#include <thread>

#include "support/service_fixture.hpp"

using namespace cadence;
using testkit::ServiceRig;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

const std::vector<std::string> kAliceLines{"I wake up at four and cannot fall asleep again",
                                           "nothing feels fun anymore"};

}  // namespace

TEST(Accounts, ValidatedOnConstruction) {
  ScriptedProvider chat;
  HashingEmbedder embedder;
  PipelineConfig config;
  config.prompt_options.use_rag = false;
  ReportPipeline pipeline(chat, embedder, CriteriaCorpus{}, SeverityStandard::hamd_default(), config);
  auto build = [&](std::vector<Account> accounts) { AssessmentService s(std::move(accounts), pipeline, chat); };
  EXPECT_EQ(code_of([&] { build({{"a", Role::kPatient, "", {}, "x"}, {"a", Role::kPatient, "", {}, "y"}}); }),
            ErrorCode::kConflict);
  EXPECT_EQ(code_of([&] { build({{"a", Role::kPatient, "", {}, "x"}, {"f", Role::kFamily, "", {}, "y"}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { build({{"d", Role::kDoctor, "", {"ghost"}, "x"}}); }), ErrorCode::kInvalidArgument);
}

TEST(Auth, LoginAndTokens) {
  ServiceRig rig;
  const std::string token = rig.service->login("alice", "alice-pw");
  EXPECT_EQ(rig.service->authenticate(token).id, "alice");
  EXPECT_EQ(code_of([&] { rig.service->login("alice", "wrong"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(code_of([&] { rig.service->login("nobody", "x"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(code_of([&] { rig.service->authenticate(token + "x"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(code_of([&] { rig.service->authenticate(""); }), ErrorCode::kUnauthorized);
}

TEST(Chat, SessionsAndTurns) {
  ServiceRig rig;
  const Session s = rig.service->open_session("alice");
  EXPECT_EQ(s.patient_id, "alice");
  EXPECT_EQ(s.subject_role, Role::kPatient);
  const Turn reply = rig.service->post_turn("alice", s.id, "I feel low");
  EXPECT_EQ(reply.speaker, Speaker::kAssistant);
  EXPECT_FALSE(reply.text.empty());
  EXPECT_EQ(rig.service->session("alice", s.id).turns.size(), 2u);
  EXPECT_EQ(rig.service->session("dr-chen", s.id).id, s.id);

  // The persona prompt goes first, then the conversation.
  const auto last_call = rig.chat.call_log().back();
  EXPECT_EQ(last_call.front().role, ChatRole::kSystem);
  EXPECT_EQ(last_call.back().content, "I feel low");

  const Session family = rig.service->open_session("bob");
  EXPECT_EQ(family.patient_id, "alice");
  EXPECT_EQ(family.subject_role, Role::kFamily);

  EXPECT_EQ(code_of([&] { rig.service->open_session("dr-chen"); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->post_turn("bob", s.id, "hi"); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->post_turn("alice", s.id, "  "); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { rig.service->session("dr-ito", s.id); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->session("alice", "ses-99"); }), ErrorCode::kNotFound);
}

TEST(Chat, FailedReplyCanBeRetriedWithoutDuplicates) {
  class Flaky final : public ChatProvider {
   public:
    std::string complete(std::span<const ChatMessage>, const CompletionParams&) override {
      if (fail) throw Error(ErrorCode::kProvider, "refused");
      return "I am listening.";
    }
    bool fail = true;
  } flaky;
  HashingEmbedder embedder;
  PipelineConfig config;
  config.prompt_options.use_rag = false;
  ReportPipeline pipeline(flaky, embedder, CriteriaCorpus{}, SeverityStandard::hamd_default(), config);
  ServiceOptions options;
  options.chat_params.retries = 0;
  AssessmentService service(testkit::sample_accounts(), pipeline, flaky, options);
  const Session s = service.open_session("alice");
  EXPECT_EQ(code_of([&] { service.post_turn("alice", s.id, "hello"); }), ErrorCode::kProvider);
  EXPECT_EQ(service.session("alice", s.id).turns.size(), 1u);
  EXPECT_EQ(code_of([&] { service.post_turn("alice", s.id, "other"); }), ErrorCode::kConflict);
  flaky.fail = false;
  service.post_turn("alice", s.id, "hello");
  EXPECT_EQ(service.session("alice", s.id).turns.size(), 2u);
}

TEST(Drafts, CloseProducesDraftWithAdvice) {
  ServiceRig rig;
  const std::string id = rig.converse("alice", kAliceLines);
  const StoredReport stored = rig.service->stored_report(id);
  EXPECT_EQ(stored.patient_id, "alice");
  EXPECT_EQ(format_date(stored.day), "2026-03-02");
  EXPECT_EQ(stored.review.state, ReviewState::kDraft);
  EXPECT_FALSE(stored.partial_information);
  ASSERT_EQ(stored.advice.size(), 2u);
  EXPECT_TRUE(validate_report(stored.report).empty());

  // Drafts stay with the doctor.
  EXPECT_EQ(code_of([&] { rig.service->get_report(id, "alice"); }), ErrorCode::kNotFound);
  EXPECT_EQ(rig.service->get_report(id, "dr-chen").at("state"), "draft");
  EXPECT_EQ(code_of([&] { rig.service->get_report(id, "dr-ito"); }), ErrorCode::kForbidden);
}

TEST(Drafts, EmptyOrRepeatedCloseSchedulesNothing) {
  ServiceRig rig;
  const Session s = rig.service->open_session("alice");
  EXPECT_FALSE(rig.service->close_session("alice", s.id).has_value());
  EXPECT_FALSE(rig.service->close_session("alice", s.id).has_value());
  EXPECT_EQ(code_of([&] { rig.service->post_turn("alice", s.id, "late"); }), ErrorCode::kConflict);
}

TEST(Drafts, FamilyOnlyDayIsPartial) {
  ServiceRig rig;
  const std::string id = rig.converse("bob", {"She has not left her room in days"});
  EXPECT_TRUE(rig.service->stored_report(id).partial_information);
}

TEST(Drafts, NewerSameDayDraftSupersedesAndCombinesSessions) {
  ServiceRig rig;
  const std::string first = rig.converse("alice", kAliceLines);
  const std::string second = rig.converse("bob", {"She stays in bed"});
  EXPECT_EQ(rig.service->stored_report(first).superseded_by, second);
  const auto combined = rig.service->stored_report(second).report.dialogue_ids;
  EXPECT_EQ(combined.size(), 2u);
  EXPECT_EQ(code_of([&] { rig.service->release_report("dr-chen", first); }), ErrorCode::kConflict);
}

TEST(Drafts, FailureIsReportedOnTheJob) {
  ServiceRig rig({}, {ScriptedRule::substring("Output the report in a fixed JSON format", "no json here")});
  const Session s = rig.service->open_session("alice");
  rig.service->post_turn("alice", s.id, "hello");
  const auto job = rig.service->close_session("alice", s.id);
  EXPECT_THROW(rig.service->wait_job(*job), ReportGenerationError);
  const JobStatus status = rig.service->job_status(*job);
  EXPECT_EQ(status.state, JobState::kFailed);
  EXPECT_TRUE(status.error.has_value());
  EXPECT_EQ(code_of([&] { rig.service->job_status("job-99"); }), ErrorCode::kNotFound);
}

TEST(Review, RevisionAndRelease) {
  ServiceRig rig;
  const std::string id = rig.converse("alice", kAliceLines);

  EXPECT_EQ(code_of([&] { rig.service->revise_report("alice", id, {{"narrative", "x"}}); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->revise_report("dr-chen", id, {{"id", "x"}}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { rig.service->revise_report("dr-chen", id, Json::object()); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { rig.service->revise_report("dr-chen", id, {{"severity_degree", "normal"}}); }),
            ErrorCode::kValidation);
  EXPECT_EQ(code_of([&] { rig.service->revise_report("dr-chen", id, {{"severity_degree", "bogus"}}); }),
            ErrorCode::kValidation);

  rig.now += 60;
  const ReviewRecord revised = rig.service->revise_report(
      "dr-chen", id, {{"severity_degree", "moderate"}, {"care_advice", "Sit with her at breakfast."}});
  EXPECT_EQ(revised.revisions.size(), 1u);
  const StoredReport stored = rig.service->stored_report(id);
  EXPECT_EQ(stored.report.severity, SeverityDegree::kModerate);
  EXPECT_EQ(stored.advice.at(1).text, "Sit with her at breakfast.");

  rig.now += 60;
  const ReviewRecord released = rig.service->release_report("dr-chen", id);
  EXPECT_EQ(released.state, ReviewState::kReleased);
  EXPECT_EQ(released.released_at, rig.now.load());
  EXPECT_EQ(released.released_by, "dr-chen");
  rig.now += 60;
  EXPECT_EQ(rig.service->release_report("dr-chen", id).released_at, released.released_at);
  EXPECT_EQ(code_of([&] { rig.service->revise_report("dr-chen", id, {{"narrative", "late"}}); }),
            ErrorCode::kConflict);
  EXPECT_EQ(code_of([&] { rig.service->release_report("dr-ito", id); }), ErrorCode::kForbidden);
}

TEST(Views, PatientAndFamilySeeOnlyTheirShare) {
  ServiceRig rig;
  rig.converse("alice", kAliceLines);
  const std::string id = rig.converse("bob", {"She wakes at dawn"});
  rig.service->release_report("dr-chen", id);

  const Json for_alice = rig.service->get_report(id, "alice");
  ASSERT_EQ(for_alice.at("advice").size(), 1u);
  EXPECT_EQ(for_alice.at("advice")[0].at("kind"), "treatment_strategy");
  EXPECT_FALSE(for_alice.contains("review"));
  // Evidence quoted from Alice's own words stays visible to her, not to Bob.
  EXPECT_EQ(for_alice.at("findings")[0].at("evidence"), kAliceLines[0]);
  const Json for_bob = rig.service->get_report(id, "bob");
  EXPECT_EQ(for_bob.at("advice")[0].at("kind"), "care_advice");
  EXPECT_EQ(for_bob.at("findings")[0].at("evidence"), "");
  EXPECT_EQ(rig.service->get_report(id, "dr-chen").at("advice").size(), 2u);
  EXPECT_EQ(code_of([&] { rig.service->get_report(id, "carol"); }), ErrorCode::kForbidden);
}

TEST(Views, TimelineIsRoleFilteredAndOrdered) {
  ServiceRig rig;
  rig.converse("alice", kAliceLines);
  const std::string id = rig.converse("bob", {"She wakes at dawn"});
  rig.now += 60;
  rig.service->revise_report("dr-chen", id, {{"narrative", "Checked."}});
  rig.now += 60;
  rig.service->release_report("dr-chen", id);
  rig.now += 60;
  rig.service->submit_feedback("alice", id, "Thanks");
  rig.now += 60;
  rig.service->submit_feedback("bob", id, "Helpful");

  auto kinds = [](const std::vector<TimelineEntry>& entries) {
    std::map<std::string, int> out;
    for (const auto& e : entries) ++out[e.kind];
    return out;
  };
  const auto doctor = rig.service->get_timeline("alice", "dr-chen");
  EXPECT_EQ(kinds(doctor), (std::map<std::string, int>{
                               {"advice", 4}, {"dialogue", 2}, {"feedback", 2}, {"report", 2}, {"revision", 1}}));
  for (std::size_t i = 1; i < doctor.size(); ++i) EXPECT_LE(doctor[i - 1].at, doctor[i].at);

  const auto alice = rig.service->get_timeline("alice", "alice");
  EXPECT_EQ(kinds(alice),
            (std::map<std::string, int>{{"advice", 1}, {"dialogue", 1}, {"feedback", 1}, {"report", 1}}));
  const auto bob = rig.service->get_timeline("alice", "bob");
  for (const auto& e : bob) {
    if (e.kind == "dialogue") {
      EXPECT_EQ(e.payload.at("account_id"), "bob");
    }
    if (e.kind == "feedback") {
      EXPECT_EQ(e.payload.at("author_id"), "bob");
    }
  }
  EXPECT_EQ(code_of([&] { rig.service->get_timeline("alice", "carol"); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->get_timeline("bob", "dr-chen"); }), ErrorCode::kNotFound);
}

TEST(Feedback, RulesAndIds) {
  ServiceRig rig;
  const std::string id = rig.converse("alice", kAliceLines);
  EXPECT_EQ(code_of([&] { rig.service->submit_feedback("alice", id, "early"); }), ErrorCode::kNotFound);
  rig.service->release_report("dr-chen", id);
  EXPECT_EQ(code_of([&] { rig.service->submit_feedback("dr-chen", id, "x"); }), ErrorCode::kForbidden);
  EXPECT_EQ(code_of([&] { rig.service->submit_feedback("alice", id, " "); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { rig.service->submit_feedback("carol", id, "x"); }), ErrorCode::kForbidden);
  const FeedbackEntry entry = rig.service->submit_feedback("bob", id, "Helpful");
  EXPECT_EQ(entry.id, "fb-1");
  EXPECT_EQ(entry.author_role, Role::kFamily);
}

TEST(Views, PatientListForDoctors) {
  ServiceRig rig;
  const std::string id = rig.converse("alice", kAliceLines);
  rig.service->release_report("dr-chen", id);
  const auto list = rig.service->list_patients("dr-chen");
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].patient_id, "alice");
  EXPECT_EQ(list[0].last_login, testkit::kMorning);
  ASSERT_TRUE(list[0].latest_status.has_value());
  EXPECT_EQ(list[0].latest_status->second, SeverityDegree::kMild);
  EXPECT_EQ(list[1].patient_id, "carol");
  EXPECT_FALSE(list[1].last_login.has_value());
  EXPECT_EQ(code_of([&] { rig.service->list_patients("alice"); }), ErrorCode::kForbidden);
}

TEST(Views, CyclicalUsesReleasedReportsAndPatientActivity) {
  ServiceRig rig;
  const std::string draft_only = rig.converse("alice", kAliceLines);
  const DateRange window{*parse_date("2026-03-01"), *parse_date("2026-03-04")};
  EXPECT_EQ(rig.service->cyclical("alice", "alice", window).average_score, 0.0);

  rig.service->release_report("dr-chen", draft_only);
  const auto summary = rig.service->cyclical("alice", "bob", window);
  EXPECT_EQ(summary.daily_scores.at(1).score, 50);
  EXPECT_DOUBLE_EQ(summary.average_score, 12.5);
  EXPECT_EQ(summary.login_count, 1u);
  EXPECT_EQ(summary.user_turn_count, 2u);
  EXPECT_TRUE(summary.narrative_available);
  EXPECT_EQ(code_of([&] { rig.service->cyclical("alice", "carol", window); }), ErrorCode::kForbidden);
}

TEST(Persistence, StateIsReplayedFromStorage) {
  const auto dir = fresh_dir("cadence_service_replay");
  std::string id;
  {
    ServiceRig rig(dir);
    id = rig.converse("alice", kAliceLines);
    rig.service->revise_report("dr-chen", id, {{"narrative", "Reviewed."}});
    rig.service->release_report("dr-chen", id);
    rig.service->submit_feedback("alice", id, "Thanks");
  }
  ServiceRig again(dir);
  const StoredReport stored = again.service->stored_report(id);
  EXPECT_EQ(stored.review.state, ReviewState::kReleased);
  EXPECT_EQ(stored.report.narrative, "Reviewed.");
  EXPECT_EQ(stored.review.revisions.size(), 1u);
  EXPECT_EQ(again.service->get_timeline("alice", "alice").back().kind, "feedback");
  EXPECT_EQ(again.service->submit_feedback("alice", id, "Again").id, "fb-2");
  const Session next = again.service->open_session("alice");
  EXPECT_EQ(next.id, "ses-2");
}

TEST(Concurrency, ParallelSessionsDraftOncePerDay) {
  ServiceRig rig;
  std::vector<std::thread> threads;
  std::vector<std::string> reports(4);
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] {
      const std::string account = i % 2 ? "bob" : "alice";
      const Session s = rig.service->open_session(account);
      rig.service->post_turn(account, s.id, "line " + std::to_string(i));
      reports[i] = rig.service->wait_job(*rig.service->close_session(account, s.id));
    });
  }
  for (auto& t : threads) t.join();
  rig.service->wait_all_jobs();
  // Exactly one draft for the day is left standing and it covers the latest
  // patient and family sessions.
  int live = 0;
  for (int i = 1; i <= 8; ++i) {
    try {
      if (!rig.service->stored_report("rpt-" + std::to_string(i)).superseded_by) ++live;
    } catch (const Error&) {
      break;
    }
  }
  EXPECT_EQ(live, 1);
}
