#pragma once

// Shared vocabulary: roles, dialogues, labels, reports and severity banding.
// Everything here is a plain value type; the functions are pure.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cadence/error.hpp"

namespace cadence {

/// UTC seconds since the epoch.
using Timestamp = std::int64_t;
using Date = std::chrono::year_month_day;

enum class Role { kPatient, kFamily, kDoctor };
enum class Speaker { kUser, kAssistant };
enum class BinaryClass { kNotDepressed, kDepressed };

/// Ordered: kNormal < kMild < kModerate < kSevere.
enum class SeverityDegree { kNormal, kMild, kModerate, kSevere };

enum class AdviceKind { kTreatmentStrategy, kCareAdvice };

inline constexpr int kHamdMax = 52;
inline constexpr std::string_view kNoSubtype = "none";

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;
  Timestamp at = 0;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct SourceLabel {
  std::optional<BinaryClass> binary;
  std::optional<SeverityDegree> severity;
  std::optional<int> hamd;

  /// Binary class implied by whichever field is present, most specific last:
  /// explicit binary, then severity, then HAMD score.
  std::optional<BinaryClass> effective_binary() const;

  friend bool operator==(const SourceLabel&, const SourceLabel&) = default;
};

struct Dialogue {
  std::string id;
  Role subject_role = Role::kPatient;
  std::vector<Turn> turns;
  Date day{};
  std::optional<SourceLabel> label;

  std::size_t user_turn_count() const;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct SeverityStandard {
  std::string id;
  std::string text;

  /// Grading guidance paraphrasing the HAMD bands used by band_hamd().
  static SeverityStandard hamd_default();
};

struct Finding {
  std::string symptom;
  std::string evidence;
  std::string criterion;
  bool agreement = false;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct DiagnosticReport {
  std::string id;
  std::vector<std::string> dialogue_ids;
  BinaryClass binary_class = BinaryClass::kNotDepressed;
  SeverityDegree severity = SeverityDegree::kNormal;
  std::vector<Finding> findings;
  std::string subtype_category{kNoSubtype};
  std::optional<std::string> narrative;
  Timestamp created_at = 0;

  friend bool operator==(const DiagnosticReport&, const DiagnosticReport&) = default;
};

struct Advice {
  AdviceKind kind = AdviceKind::kTreatmentStrategy;
  std::string report_id;
  std::string text;

  friend bool operator==(const Advice&, const Advice&) = default;
};

/// Maps a HAMD total to its severity band. Throws Error(kDomain) outside 0..52.
SeverityDegree band_hamd(int score);

BinaryClass severity_to_binary(SeverityDegree severity);

/// Treatment strategies go to the patient, care advice to the family.
Role advice_audience(AdviceKind kind);
AdviceKind advice_kind_for(Role audience);

/// All violated report invariants; empty means the report is consistent.
std::vector<Violation> validate_report(const DiagnosticReport& report);

std::vector<Violation> validate_label(const SourceLabel& label);

enum class Opening { kAny, kAssistantFirst };

/// Structural checks shared by every dialogue: non-empty id, non-blank turn
/// text, strict speaker alternation, non-decreasing timestamps.
std::vector<Violation> validate_dialogue(const Dialogue& dialogue,
                                         Opening opening = Opening::kAny);

bool is_blank(std::string_view text);

// Enum vocabulary, lowercase snake case on the wire.
std::string_view to_string(Role role);
std::string_view to_string(Speaker speaker);
std::string_view to_string(BinaryClass binary);
std::string_view to_string(SeverityDegree severity);
std::string_view to_string(AdviceKind kind);

std::optional<Role> parse_role(std::string_view text);
std::optional<Speaker> parse_speaker(std::string_view text);
std::optional<BinaryClass> parse_binary(std::string_view text);
std::optional<SeverityDegree> parse_severity(std::string_view text);
std::optional<AdviceKind> parse_advice_kind(std::string_view text);

/// Inclusive calendar range.
struct DateRange {
  Date from{};
  Date to{};

  bool contains(Date day) const { return from <= day && day <= to; }
  std::vector<Date> days() const;

  /// The calendar month containing day.
  static DateRange month_of(Date day);

  friend bool operator==(const DateRange&, const DateRange&) = default;
};

// Calendar helpers. Dates are always UTC.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);
Date date_of(Timestamp ts);
Timestamp start_of(Date date);

}  // namespace cadence
