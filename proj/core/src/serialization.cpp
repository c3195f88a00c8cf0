#include "cadence/serialization.hpp"

namespace cadence {
namespace {

const Json& require(const Json& j, const std::string& field) {
  if (!j.is_object()) throw FieldError(field, "expected a JSON object containing \"" + field + "\"");
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) throw FieldError(field, "missing required field \"" + field + "\"");
  return *it;
}

std::string require_string(const Json& j, const std::string& field) {
  const Json& v = require(j, field);
  if (!v.is_string()) throw FieldError(field, "field \"" + field + "\" must be a string");
  return v.get<std::string>();
}

template <typename Enum, typename Parse>
Enum require_enum(const Json& j, const std::string& field, Parse parse) {
  const std::string text = require_string(j, field);
  auto value = parse(text);
  if (!value) throw FieldError(field, "field \"" + field + "\" has unknown value \"" + text + "\"");
  return *value;
}

template <typename Enum, typename Parse>
std::optional<Enum> optional_enum(const Json& j, const std::string& field, Parse parse) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FieldError(field, "field \"" + field + "\" must be a string");
  auto value = parse(it->get<std::string>());
  if (!value) {
    throw FieldError(field, "field \"" + field + "\" has unknown value \"" +
                                it->get<std::string>() + "\"");
  }
  return value;
}

std::int64_t optional_int(const Json& j, const std::string& field, std::int64_t fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw FieldError(field, "field \"" + field + "\" must be an integer");
  return it->get<std::int64_t>();
}

// Prefixes nested field names so errors point at the full path.
template <typename Fn>
auto nested(const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const FieldError& e) {
    std::vector<std::string> fields;
    for (const auto& f : e.fields()) fields.push_back(prefix + "." + f);
    throw FieldError(std::move(fields), std::string(e.what()) + " (in " + prefix + ")");
  }
}

}  // namespace

void to_json(Json& j, const Turn& turn) {
  j = Json{{"speaker", to_string(turn.speaker)}, {"text", turn.text}, {"at", turn.at}};
}

void from_json(const Json& j, Turn& turn) {
  turn.speaker = require_enum<Speaker>(j, "speaker", parse_speaker);
  turn.text = require_string(j, "text");
  turn.at = optional_int(j, "at", 0);
}

void to_json(Json& j, const SourceLabel& label) {
  j = Json::object();
  if (label.binary) j["binary"] = to_string(*label.binary);
  if (label.severity) j["severity"] = to_string(*label.severity);
  if (label.hamd) j["hamd"] = *label.hamd;
}

void from_json(const Json& j, SourceLabel& label) {
  if (!j.is_object()) throw FieldError("label", "label must be an object");
  label.binary = optional_enum<BinaryClass>(j, "binary", parse_binary);
  label.severity = optional_enum<SeverityDegree>(j, "severity", parse_severity);
  label.hamd.reset();
  if (auto it = j.find("hamd"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw FieldError("hamd", "hamd must be an integer");
    label.hamd = it->get<int>();
  }
}

void to_json(Json& j, const Dialogue& dialogue) {
  j = Json{{"id", dialogue.id},
           {"subject_role", to_string(dialogue.subject_role)},
           {"turns", dialogue.turns},
           {"day", format_date(dialogue.day)}};
  if (dialogue.label) j["label"] = *dialogue.label;
}

void from_json(const Json& j, Dialogue& dialogue) {
  dialogue.id = require_string(j, "id");
  dialogue.subject_role = require_enum<Role>(j, "subject_role", parse_role);
  const Json& turns = require(j, "turns");
  if (!turns.is_array()) throw FieldError("turns", "turns must be an array");
  dialogue.turns.clear();
  for (std::size_t i = 0; i < turns.size(); ++i) {
    dialogue.turns.push_back(nested("turns[" + std::to_string(i) + "]",
                                    [&] { return turns[i].get<Turn>(); }));
  }
  const std::string day = require_string(j, "day");
  auto parsed = parse_date(day);
  if (!parsed) throw FieldError("day", "day must be YYYY-MM-DD, got \"" + day + "\"");
  dialogue.day = *parsed;
  dialogue.label.reset();
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    dialogue.label = nested("label", [&] { return it->get<SourceLabel>(); });
  }
}

void to_json(Json& j, const Finding& finding) {
  j = Json{{"symptom", finding.symptom},
           {"evidence", finding.evidence},
           {"criterion", finding.criterion},
           {"agreement", finding.agreement}};
}

void from_json(const Json& j, Finding& finding) {
  finding.symptom = require_string(j, "symptom");
  finding.criterion = require_string(j, "criterion");
  finding.evidence.clear();
  if (auto it = j.find("evidence"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FieldError("evidence", "evidence must be a string");
    finding.evidence = it->get<std::string>();
  }
  const Json& agreement = require(j, "agreement");
  if (!agreement.is_boolean()) throw FieldError("agreement", "agreement must be a boolean");
  finding.agreement = agreement.get<bool>();
}

Json report_body_json(const DiagnosticReport& report) {
  Json j{{"binary_class", to_string(report.binary_class)},
         {"severity_degree", to_string(report.severity)},
         {"findings", report.findings},
         {"subtype_category", report.subtype_category}};
  if (report.narrative) j["narrative"] = *report.narrative;
  return j;
}

void to_json(Json& j, const DiagnosticReport& report) {
  j = report_body_json(report);
  j["id"] = report.id;
  j["dialogue_ids"] = report.dialogue_ids;
  j["created_at"] = report.created_at;
}

DiagnosticReport report_from_json(const Json& j) {
  if (!j.is_object()) throw FieldError("report", "report must be a JSON object");
  DiagnosticReport report;
  report.binary_class = require_enum<BinaryClass>(j, "binary_class", parse_binary);
  report.severity = require_enum<SeverityDegree>(j, "severity_degree", parse_severity);
  const Json& findings = require(j, "findings");
  if (!findings.is_array()) throw FieldError("findings", "findings must be an array");
  for (std::size_t i = 0; i < findings.size(); ++i) {
    report.findings.push_back(nested("findings[" + std::to_string(i) + "]",
                                     [&] { return findings[i].get<Finding>(); }));
  }
  report.subtype_category = require_string(j, "subtype_category");
  if (auto it = j.find("narrative"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FieldError("narrative", "narrative must be a string");
    report.narrative = it->get<std::string>();
  }
  if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FieldError("id", "id must be a string");
    report.id = it->get<std::string>();
  }
  if (auto it = j.find("dialogue_ids"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw FieldError("dialogue_ids", "dialogue_ids must be an array");
    for (const auto& id : *it) {
      if (!id.is_string()) throw FieldError("dialogue_ids", "dialogue_ids must hold strings");
      report.dialogue_ids.push_back(id.get<std::string>());
    }
  }
  report.created_at = optional_int(j, "created_at", 0);
  return report;
}

void from_json(const Json& j, DiagnosticReport& report) { report = report_from_json(j); }

std::string serialize_report(const DiagnosticReport& report) { return Json(report).dump(); }

void to_json(Json& j, const Advice& advice) {
  j = Json{{"kind", to_string(advice.kind)}, {"report_id", advice.report_id}, {"text", advice.text}};
}

void from_json(const Json& j, Advice& advice) {
  advice.kind = require_enum<AdviceKind>(j, "kind", parse_advice_kind);
  advice.report_id = require_string(j, "report_id");
  advice.text = require_string(j, "text");
}

void to_json(Json& j, const SeverityStandard& standard) {
  j = Json{{"id", standard.id}, {"text", standard.text}};
}

void from_json(const Json& j, SeverityStandard& standard) {
  standard.id = require_string(j, "id");
  standard.text = require_string(j, "text");
}

}  // namespace cadence
