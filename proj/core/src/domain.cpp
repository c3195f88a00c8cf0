#include "cadence/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <sstream>

namespace cadence {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kValidation: return "validation_failed";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kTransport: return "transport_error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kProvider: return "provider_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kUnauthorized: return "unauthorized";
    case ErrorCode::kForbidden: return "forbidden";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].field << ": " << violations[i].message;
  }
  return out.str();
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

SeverityDegree band_hamd(int score) {
  if (score < 0 || score > kHamdMax) {
    throw Error(ErrorCode::kDomain,
                "HAMD score " + std::to_string(score) + " outside 0.." +
                    std::to_string(kHamdMax));
  }
  if (score < 7) return SeverityDegree::kNormal;
  if (score <= 16) return SeverityDegree::kMild;
  if (score <= 23) return SeverityDegree::kModerate;
  return SeverityDegree::kSevere;
}

BinaryClass severity_to_binary(SeverityDegree severity) {
  return severity == SeverityDegree::kNormal ? BinaryClass::kNotDepressed
                                             : BinaryClass::kDepressed;
}

Role advice_audience(AdviceKind kind) {
  return kind == AdviceKind::kTreatmentStrategy ? Role::kPatient : Role::kFamily;
}

AdviceKind advice_kind_for(Role audience) {
  switch (audience) {
    case Role::kPatient: return AdviceKind::kTreatmentStrategy;
    case Role::kFamily: return AdviceKind::kCareAdvice;
    case Role::kDoctor: break;
  }
  throw Error(ErrorCode::kDomain, "advice is addressed to a patient or a family member");
}

std::optional<BinaryClass> SourceLabel::effective_binary() const {
  if (binary) return binary;
  if (severity) return severity_to_binary(*severity);
  if (hamd && *hamd >= 0 && *hamd <= kHamdMax) return severity_to_binary(band_hamd(*hamd));
  return std::nullopt;
}

std::size_t Dialogue::user_turn_count() const {
  return static_cast<std::size_t>(std::count_if(
      turns.begin(), turns.end(), [](const Turn& t) { return t.speaker == Speaker::kUser; }));
}

SeverityStandard SeverityStandard::hamd_default() {
  return {
      "hamd-bands",
      "Grade severity from the overall symptom burden, as on the Hamilton scale. "
      "A total below 7 is normal (no depression). "
      "A total from 7 to 16 is mild depression. "
      "A total from 17 to 23 is moderate depression. "
      "A total of 24 or more is severe depression.",
  };
}

std::vector<Violation> validate_report(const DiagnosticReport& report) {
  std::vector<Violation> out;
  const bool depressed = report.binary_class == BinaryClass::kDepressed;
  if (depressed != (report.severity != SeverityDegree::kNormal)) {
    out.push_back({"severity_degree", "binary/severity mismatch"});
  }
  const bool no_subtype = report.subtype_category == kNoSubtype;
  if (!depressed && !no_subtype) {
    out.push_back({"subtype_category", "subtype must be none"});
  }
  if (depressed && (no_subtype || is_blank(report.subtype_category))) {
    out.push_back({"subtype_category", "subtype required when depressed"});
  }
  if (depressed && report.findings.empty()) {
    out.push_back({"findings", "findings required when depressed"});
  }
  for (std::size_t i = 0; i < report.findings.size(); ++i) {
    const auto& f = report.findings[i];
    const std::string prefix = "findings[" + std::to_string(i) + "].";
    if (is_blank(f.symptom)) out.push_back({prefix + "symptom", "symptom is empty"});
    if (is_blank(f.criterion)) out.push_back({prefix + "criterion", "criterion is empty"});
  }
  return out;
}

std::vector<Violation> validate_label(const SourceLabel& label) {
  std::vector<Violation> out;
  if (label.hamd) {
    if (*label.hamd < 0 || *label.hamd > kHamdMax) {
      out.push_back({"hamd", "score outside 0..52"});
    } else if (label.severity && *label.severity != band_hamd(*label.hamd)) {
      out.push_back({"severity", "severity disagrees with HAMD band"});
    }
  }
  if (label.binary && label.severity && *label.binary != severity_to_binary(*label.severity)) {
    out.push_back({"binary", "binary disagrees with severity"});
  }
  return out;
}

std::vector<Violation> validate_dialogue(const Dialogue& dialogue, Opening opening) {
  std::vector<Violation> out;
  if (dialogue.id.empty()) out.push_back({"id", "dialogue id is empty"});
  if (dialogue.subject_role == Role::kDoctor) {
    out.push_back({"subject_role", "dialogues belong to a patient or a family member"});
  }
  if (dialogue.turns.empty()) {
    out.push_back({"turns", "dialogue has no turns"});
    return out;
  }
  if (opening == Opening::kAssistantFirst && dialogue.turns.front().speaker != Speaker::kAssistant) {
    out.push_back({"opening", "dialogue must open with the counselor"});
  }
  for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
    const auto& turn = dialogue.turns[i];
    const std::string field = "turns[" + std::to_string(i) + "]";
    if (is_blank(turn.text)) out.push_back({field + ".text", "turn text is blank"});
    if (i > 0) {
      const auto& prev = dialogue.turns[i - 1];
      if (prev.speaker == turn.speaker) {
        out.push_back({"alternation", field + " repeats the previous speaker"});
      }
      if (turn.at < prev.at) out.push_back({field + ".at", "timestamp goes backwards"});
    }
  }
  if (dialogue.label) {
    for (auto v : validate_label(*dialogue.label)) {
      v.field = "label." + v.field;
      out.push_back(std::move(v));
    }
  }
  return out;
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<std::string_view, Enum>, N>& table,
                           std::string_view text) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, Role>, 3> kRoles{{
    {"patient", Role::kPatient}, {"family", Role::kFamily}, {"doctor", Role::kDoctor}}};
constexpr std::array<std::pair<std::string_view, Speaker>, 2> kSpeakers{{
    {"user", Speaker::kUser}, {"assistant", Speaker::kAssistant}}};
constexpr std::array<std::pair<std::string_view, BinaryClass>, 2> kBinary{{
    {"not_depressed", BinaryClass::kNotDepressed}, {"depressed", BinaryClass::kDepressed}}};
constexpr std::array<std::pair<std::string_view, SeverityDegree>, 4> kSeverity{{
    {"normal", SeverityDegree::kNormal},
    {"mild", SeverityDegree::kMild},
    {"moderate", SeverityDegree::kModerate},
    {"severe", SeverityDegree::kSevere}}};
constexpr std::array<std::pair<std::string_view, AdviceKind>, 2> kAdvice{{
    {"treatment_strategy", AdviceKind::kTreatmentStrategy},
    {"care_advice", AdviceKind::kCareAdvice}}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, Enum>, N>& table,
                         Enum value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

}  // namespace

std::string_view to_string(Role role) { return name_of(kRoles, role); }
std::string_view to_string(Speaker speaker) { return name_of(kSpeakers, speaker); }
std::string_view to_string(BinaryClass binary) { return name_of(kBinary, binary); }
std::string_view to_string(SeverityDegree severity) { return name_of(kSeverity, severity); }
std::string_view to_string(AdviceKind kind) { return name_of(kAdvice, kind); }

std::optional<Role> parse_role(std::string_view text) { return lookup(kRoles, text); }
std::optional<Speaker> parse_speaker(std::string_view text) { return lookup(kSpeakers, text); }
std::optional<BinaryClass> parse_binary(std::string_view text) { return lookup(kBinary, text); }
std::optional<SeverityDegree> parse_severity(std::string_view text) {
  return lookup(kSeverity, text);
}
std::optional<AdviceKind> parse_advice_kind(std::string_view text) {
  return lookup(kAdvice, text);
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& value) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    return ec == std::errc{} && ptr == part.data() + part.size();
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) ||
      !parse(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

Date date_of(Timestamp ts) {
  using namespace std::chrono;
  return Date{floor<days>(sys_seconds{seconds{ts}})};
}

std::vector<Date> DateRange::days() const {
  using namespace std::chrono;
  std::vector<Date> out;
  for (sys_days d{from}; d <= sys_days{to}; d += std::chrono::days{1}) out.emplace_back(d);
  return out;
}

DateRange DateRange::month_of(Date day) {
  using namespace std::chrono;
  const year_month ym{day.year(), day.month()};
  return {Date{ym / 1}, Date{ym / last}};
}

Timestamp start_of(Date date) {
  using namespace std::chrono;
  return sys_seconds{sys_days{date}}.time_since_epoch().count();
}

}  // namespace cadence
