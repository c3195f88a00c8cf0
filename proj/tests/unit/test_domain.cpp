#include <gtest/gtest.h>

#include "cadence/domain.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace cadence;
using namespace std::chrono;

namespace {

bool has_field(const std::vector<Violation>& violations, const std::string& field) {
  for (const auto& v : violations) {
    if (v.field == field) return true;
  }
  return false;
}

DiagnosticReport depressed_report() {
  DiagnosticReport r;
  r.id = "r1";
  r.binary_class = BinaryClass::kDepressed;
  r.severity = SeverityDegree::kModerate;
  r.subtype_category = "melancholic";
  r.findings.push_back({"insomnia", "I wake at 4", "early waking", true});
  return r;
}

}  // namespace

TEST(HamdBanding, MatchesLookupTableOnWholeRange) {
  for (int score = 0; score <= kHamdMax; ++score) {
    EXPECT_EQ(to_string(band_hamd(score)), testkit::oracle_band(score)) << "score " << score;
  }
}

TEST(HamdBanding, BandEdges) {
  EXPECT_EQ(band_hamd(6), SeverityDegree::kNormal);
  EXPECT_EQ(band_hamd(7), SeverityDegree::kMild);
  EXPECT_EQ(band_hamd(16), SeverityDegree::kMild);
  EXPECT_EQ(band_hamd(17), SeverityDegree::kModerate);
  EXPECT_EQ(band_hamd(23), SeverityDegree::kModerate);
  EXPECT_EQ(band_hamd(24), SeverityDegree::kSevere);
  EXPECT_EQ(band_hamd(52), SeverityDegree::kSevere);
}

TEST(HamdBanding, RejectsOutOfRange) {
  for (int score : {-1, 53, 1000}) {
    try {
      band_hamd(score);
      FAIL() << "accepted " << score;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
}

TEST(HamdBanding, MonotoneInScore) {
  for (int score = 1; score <= kHamdMax; ++score) EXPECT_LE(band_hamd(score - 1), band_hamd(score));
}

TEST(SeverityToBinary, OnlyNormalIsNotDepressed) {
  EXPECT_EQ(severity_to_binary(SeverityDegree::kNormal), BinaryClass::kNotDepressed);
  EXPECT_EQ(severity_to_binary(SeverityDegree::kMild), BinaryClass::kDepressed);
  EXPECT_EQ(severity_to_binary(SeverityDegree::kModerate), BinaryClass::kDepressed);
  EXPECT_EQ(severity_to_binary(SeverityDegree::kSevere), BinaryClass::kDepressed);
}

TEST(Advice, AudienceMapping) {
  EXPECT_EQ(advice_audience(AdviceKind::kTreatmentStrategy), Role::kPatient);
  EXPECT_EQ(advice_audience(AdviceKind::kCareAdvice), Role::kFamily);
  EXPECT_EQ(advice_kind_for(Role::kPatient), AdviceKind::kTreatmentStrategy);
  EXPECT_EQ(advice_kind_for(Role::kFamily), AdviceKind::kCareAdvice);
  EXPECT_THROW(advice_kind_for(Role::kDoctor), Error);
}

TEST(ValidateReport, AcceptsConsistentReports) {
  EXPECT_TRUE(validate_report(depressed_report()).empty());
  DiagnosticReport healthy;
  EXPECT_TRUE(validate_report(healthy).empty());
}

TEST(ValidateReport, FlagsBinarySeverityMismatch) {
  auto r = depressed_report();
  r.severity = SeverityDegree::kNormal;
  EXPECT_TRUE(has_field(validate_report(r), "severity_degree"));

  DiagnosticReport healthy;
  healthy.severity = SeverityDegree::kMild;
  EXPECT_TRUE(has_field(validate_report(healthy), "severity_degree"));
}

TEST(ValidateReport, SubtypeRules) {
  auto r = depressed_report();
  r.subtype_category = "none";
  EXPECT_TRUE(has_field(validate_report(r), "subtype_category"));
  r.subtype_category = "  ";
  EXPECT_TRUE(has_field(validate_report(r), "subtype_category"));

  DiagnosticReport healthy;
  healthy.subtype_category = "atypical";
  EXPECT_TRUE(has_field(validate_report(healthy), "subtype_category"));
}

TEST(ValidateReport, FindingsRequiredWhenDepressed) {
  auto r = depressed_report();
  r.findings.clear();
  EXPECT_TRUE(has_field(validate_report(r), "findings"));
  r = depressed_report();
  r.findings[0].symptom = "";
  r.findings[0].criterion = " ";
  const auto v = validate_report(r);
  EXPECT_TRUE(has_field(v, "findings[0].symptom"));
  EXPECT_TRUE(has_field(v, "findings[0].criterion"));
}

TEST(ValidateReport, RandomReportsAreValid) {
  StableRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto r = testkit::random_report(rng, "r" + std::to_string(i));
    EXPECT_TRUE(validate_report(r).empty()) << describe(validate_report(r));
  }
}

TEST(ValidateLabel, ConsistencyChecks) {
  EXPECT_TRUE(validate_label({BinaryClass::kDepressed, SeverityDegree::kMild, 12}).empty());
  EXPECT_EQ(validate_label({std::nullopt, SeverityDegree::kMild, 30}).at(0).field, "severity");
  EXPECT_EQ(validate_label({BinaryClass::kNotDepressed, SeverityDegree::kSevere, std::nullopt}).at(0).field,
            "binary");
  EXPECT_EQ(validate_label({std::nullopt, std::nullopt, 60}).at(0).field, "hamd");
}

TEST(SourceLabel, EffectiveBinaryPrefersExplicitField) {
  EXPECT_EQ((SourceLabel{std::nullopt, std::nullopt, 3}.effective_binary()), BinaryClass::kNotDepressed);
  EXPECT_EQ((SourceLabel{std::nullopt, std::nullopt, 20}.effective_binary()), BinaryClass::kDepressed);
  EXPECT_EQ((SourceLabel{std::nullopt, SeverityDegree::kNormal, std::nullopt}.effective_binary()),
            BinaryClass::kNotDepressed);
  EXPECT_EQ((SourceLabel{BinaryClass::kDepressed, std::nullopt, std::nullopt}.effective_binary()),
            BinaryClass::kDepressed);
  EXPECT_FALSE(SourceLabel{}.effective_binary());
}

TEST(ValidateDialogue, StructuralChecks) {
  StableRng rng(3);
  Dialogue d = testkit::random_dialogue(rng, "d1");
  EXPECT_TRUE(validate_dialogue(d).empty());

  Dialogue repeated = d;
  repeated.turns[1].speaker = repeated.turns[0].speaker;
  EXPECT_TRUE(has_field(validate_dialogue(repeated), "alternation"));

  Dialogue blank = d;
  blank.turns[0].text = "   ";
  EXPECT_TRUE(has_field(validate_dialogue(blank), "turns[0].text"));

  Dialogue backwards = d;
  backwards.turns[1].at = backwards.turns[0].at - 1;
  EXPECT_TRUE(has_field(validate_dialogue(backwards), "turns[1].at"));

  EXPECT_TRUE(has_field(validate_dialogue(d, Opening::kAssistantFirst), "opening"));

  Dialogue doctor = d;
  doctor.subject_role = Role::kDoctor;
  EXPECT_TRUE(has_field(validate_dialogue(doctor), "subject_role"));

  Dialogue empty = d;
  empty.turns.clear();
  EXPECT_TRUE(has_field(validate_dialogue(empty), "turns"));

  Dialogue labelled = d;
  labelled.label = SourceLabel{BinaryClass::kNotDepressed, SeverityDegree::kSevere, std::nullopt};
  EXPECT_TRUE(has_field(validate_dialogue(labelled), "label.binary"));
}

TEST(Vocabulary, EnumsRoundTrip) {
  for (auto r : {Role::kPatient, Role::kFamily, Role::kDoctor}) EXPECT_EQ(parse_role(to_string(r)), r);
  for (auto s : {Speaker::kUser, Speaker::kAssistant}) EXPECT_EQ(parse_speaker(to_string(s)), s);
  for (auto b : {BinaryClass::kDepressed, BinaryClass::kNotDepressed}) EXPECT_EQ(parse_binary(to_string(b)), b);
  for (int i = 0; i < 4; ++i) {
    auto s = static_cast<SeverityDegree>(i);
    EXPECT_EQ(parse_severity(to_string(s)), s);
  }
  for (auto k : {AdviceKind::kTreatmentStrategy, AdviceKind::kCareAdvice}) {
    EXPECT_EQ(parse_advice_kind(to_string(k)), k);
  }
  EXPECT_EQ(to_string(BinaryClass::kNotDepressed), "not_depressed");
  EXPECT_FALSE(parse_severity("Mild"));
  EXPECT_FALSE(parse_role(""));
}

TEST(Calendar, FormatsAndParsesDates) {
  const Date d{year{2026}, month{3}, day{2}};
  EXPECT_EQ(format_date(d), "2026-03-02");
  EXPECT_EQ(parse_date("2026-03-02"), d);
  EXPECT_FALSE(parse_date("2026-02-30"));
  EXPECT_FALSE(parse_date("2026-3-2"));
  EXPECT_FALSE(parse_date("yesterday"));
}

TEST(Calendar, TimestampsMapToUtcDays) {
  const Date d{year{2026}, month{3}, day{2}};
  const Timestamp start = start_of(d);
  EXPECT_EQ(start, 1772409600);
  EXPECT_EQ(date_of(start), d);
  EXPECT_EQ(date_of(start + 86399), d);
  EXPECT_EQ(date_of(start + 86400), (Date{year{2026}, month{3}, day{3}}));
}

TEST(Calendar, RangesAreInclusive) {
  const DateRange feb = DateRange::month_of(Date{year{2024}, month{2}, day{14}});
  EXPECT_EQ(feb.from, (Date{year{2024}, month{2}, day{1}}));
  EXPECT_EQ(feb.to, (Date{year{2024}, month{2}, day{29}}));
  EXPECT_EQ(feb.days().size(), 29u);
  EXPECT_TRUE(feb.contains(feb.to));
  EXPECT_FALSE(feb.contains(Date{year{2024}, month{3}, day{1}}));
}
