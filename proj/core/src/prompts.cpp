#include "cadence/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "prompt_assets.hpp"

namespace cadence {
namespace {

void check_locale(const PromptOptions& options, const PromptLibrary& library) {
  if (!options.locale.empty() && options.locale != library.locale()) {
    throw Error(ErrorCode::kInvalidArgument, "prompt locale \"" + options.locale +
                                                 "\" not available; library locale is \"" +
                                                 library.locale() + "\"");
  }
}

void require_valid(const Dialogue& dialogue) {
  auto violations = validate_dialogue(dialogue);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

PromptBundle finish(PromptKind kind, std::vector<PromptPart> parts, const PromptOptions& options) {
  PromptBundle bundle;
  bundle.kind = kind;
  bundle.rendered = PromptBundle::join(parts);
  bundle.parts = std::move(parts);
  bundle.contains_priors = kind == PromptKind::kReportWithPriors;
  bundle.options = options;
  return bundle;
}

std::string dialogue_block(const Dialogue& dialogue, std::string_view heading_name,
                           const PromptLibrary& library) {
  return library.get(heading_name) + "\n" + render_transcript(dialogue, library);
}

std::string_view heading_for(const Dialogue& dialogue, std::size_t count) {
  if (count == 1) return "heading_dialogue";
  return dialogue.subject_role == Role::kFamily ? "heading_family" : "heading_patient";
}

std::string criteria_block(const CriteriaDocument& doc, const PromptLibrary& library) {
  return library.render("material_criteria", {{"subtype", doc.subtype_name}, {"criteria", doc.text}});
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kDialogueRewrite: return "dialogue_rewrite";
    case PromptKind::kReportWithPriors: return "report_with_priors";
    case PromptKind::kReportInference: return "report_inference";
    case PromptKind::kCounselorPersona: return "counselor_persona";
    case PromptKind::kCyclicalAnalysis: return "cyclical_analysis";
    case PromptKind::kAdviceGeneration: return "advice_generation";
  }
  return "unknown";
}

const std::string& PromptBundle::part(std::string_view name) const {
  for (const auto& p : parts) {
    if (p.name == name) return p.text;
  }
  throw Error(ErrorCode::kNotFound, "prompt has no part named " + std::string(name));
}

std::string PromptBundle::join(const std::vector<PromptPart>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "\n\n";
    out += parts[i].text;
  }
  return out;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary library = [] {
    PromptLibrary lib;
    lib.locale_ = std::string(detail::builtin_prompt_locale());
    for (const auto& [name, body] : detail::builtin_prompt_assets()) lib.templates_.emplace(name, body);
    return lib;
  }();
  return library;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir, std::string locale) {
  PromptLibrary lib = builtin();
  lib.locale_ = std::move(locale);
  const auto locale_dir = dir / lib.locale_;
  if (!std::filesystem::is_directory(locale_dir)) {
    throw Error(ErrorCode::kIo, "prompt template directory not found: " + locale_dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(locale_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    std::string text = body.str();
    // Editors like to append a final newline; templates are joined by the
    // renderer, so drop it.
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    lib.templates_.insert_or_assign(entry.path().stem().string(), std::move(text));
  }
  return lib;
}

const std::string& PromptLibrary::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw Error(ErrorCode::kNotFound, "no prompt template named " + std::string(name));
  }
  return it->second;
}

std::string PromptLibrary::render(std::string_view name,
                                  const std::map<std::string, std::string>& slots) const {
  return substitute(get(name), slots);
}

std::string PromptLibrary::substitute(std::string_view tmpl,
                                      const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string slot(tmpl.substr(open + 2, close - open - 2));
    auto it = slots.find(slot);
    if (it == slots.end()) {
      throw Error(ErrorCode::kInvalidArgument, "no value for template slot {{" + slot + "}}");
    }
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string label_literal(const SourceLabel& label) {
  std::string out;
  auto add = [&](std::string_view key, std::string_view value) {
    if (!out.empty()) out += "; ";
    out.append(key).append("=").append(value);
  };
  if (label.binary) add("binary", to_string(*label.binary));
  if (label.severity) add("severity", to_string(*label.severity));
  if (label.hamd) add("hamd", std::to_string(*label.hamd));
  if (out.empty()) out = "unlabelled";
  return out;
}

std::string render_transcript(const Dialogue& dialogue, const PromptLibrary& library) {
  const std::string& user = library.get("speaker_user");
  const std::string& assistant = library.get("speaker_assistant");
  std::string out;
  for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
    if (i) out.push_back('\n');
    const auto& turn = dialogue.turns[i];
    out += turn.speaker == Speaker::kUser ? user : assistant;
    out += ": ";
    out += turn.text;
  }
  return out;
}

PromptBundle build_dialogue_rewrite_prompt(std::string_view post, const DialogueLimits& limits,
                                           const PromptLibrary& library) {
  if (is_blank(post)) throw Error(ErrorCode::kDomain, "post is empty");
  std::vector<PromptPart> parts;
  parts.push_back({"instruction", library.get("rewrite_instruction")});
  parts.push_back({"rules", library.render("rewrite_rules",
                                           {{"min_turns", std::to_string(limits.min_turns)},
                                            {"max_turns", std::to_string(limits.max_turns)},
                                            {"max_turn_chars", std::to_string(limits.max_turn_chars)}})});
  parts.push_back({"query", library.render("rewrite_query", {{"post", std::string(post)}})});
  PromptOptions options;
  options.locale = library.locale();
  return finish(PromptKind::kDialogueRewrite, std::move(parts), options);
}

PromptBundle build_report_prompt(const Dialogue& dialogue, const SourceLabel& label,
                                 const CriteriaDocument* criteria, const SeverityStandard& standard,
                                 const PromptOptions& options, const PromptLibrary& library) {
  check_locale(options, library);
  require_valid(dialogue);
  if (options.use_rag && criteria == nullptr) {
    throw Error(ErrorCode::kDomain, "retrieval is enabled but no criteria document was supplied");
  }
  if (is_blank(standard.text)) throw Error(ErrorCode::kDomain, "severity standard is empty");

  std::vector<PromptPart> parts;
  parts.push_back({"instruction",
                   library.get(options.use_cot ? "report_instruction_cot" : "report_instruction_direct")});

  std::string chain;
  if (options.use_cot) {
    const auto& step3 = library.get(options.use_rag ? "report_step3_rag" : "report_step3_norag");
    chain = library.render("report_steps_priors", {{"step3", step3}});
  } else {
    chain = library.get("report_direct_priors");
  }
  chain += "\n\n" + library.render("material_label", {{"label", label_literal(label)}});
  chain += "\n\n" + dialogue_block(dialogue, "heading_dialogue", library);
  if (options.use_rag) chain += "\n\n" + criteria_block(*criteria, library);
  chain += "\n\n" + library.render("material_standard", {{"standard", standard.text}});
  parts.push_back({"cot", std::move(chain)});
  parts.push_back({"query", library.get("report_query")});
  return finish(PromptKind::kReportWithPriors, std::move(parts), options);
}

PromptBundle build_inference_prompt(std::span<const Dialogue> dialogues, const PromptOptions& options,
                                    const CriteriaDocument* retrieved, const PromptLibrary& library) {
  check_locale(options, library);
  if (dialogues.empty()) throw Error(ErrorCode::kDomain, "no dialogue to assess");
  for (const auto& d : dialogues) require_valid(d);
  const bool with_criteria = options.use_rag && retrieved != nullptr;

  std::vector<PromptPart> parts;
  parts.push_back({"instruction",
                   library.get(options.use_cot ? "report_instruction_cot" : "report_instruction_direct")});
  std::string chain;
  if (options.use_cot) {
    const auto& step3 = library.get(options.use_rag ? "inference_step3_rag" : "inference_step3_norag");
    chain = library.render("inference_steps", {{"step3", step3}});
  } else {
    const auto& basis = library.get(options.use_rag ? "inference_basis_rag" : "inference_basis_norag");
    chain = library.render("inference_direct", {{"basis", basis}});
  }
  for (const auto& d : dialogues) {
    chain += "\n\n" + dialogue_block(d, heading_for(d, dialogues.size()), library);
  }
  if (with_criteria) chain += "\n\n" + criteria_block(*retrieved, library);
  parts.push_back({"cot", std::move(chain)});
  parts.push_back({"query", library.get("report_query")});
  return finish(PromptKind::kReportInference, std::move(parts), options);
}

PromptBundle build_inference_prompt(const Dialogue& dialogue, const PromptOptions& options,
                                    const PromptLibrary& library) {
  return build_inference_prompt(std::span<const Dialogue>(&dialogue, 1), options, nullptr, library);
}

PromptBundle build_counselor_persona(Role subject_role, const PromptOptions& options,
                                     const PromptLibrary& library) {
  check_locale(options, library);
  std::string_view prefix;
  switch (subject_role) {
    case Role::kPatient: prefix = "persona_patient"; break;
    case Role::kFamily: prefix = "persona_family"; break;
    case Role::kDoctor:
      throw Error(ErrorCode::kDomain, "the counsellor persona talks to patients and family members");
  }
  std::vector<PromptPart> parts;
  parts.push_back({"instruction", library.get(std::string(prefix) + "_instruction")});
  parts.push_back({"rules", library.get(std::string(prefix) + "_rules")});
  parts.push_back({"query", library.get("persona_query")});
  return finish(PromptKind::kCounselorPersona, std::move(parts), options);
}

namespace {

std::string symptom_list(const DiagnosticReport& report) {
  if (report.findings.empty()) return "none reported";
  std::string out;
  for (std::size_t i = 0; i < report.findings.size(); ++i) {
    if (i) out += ", ";
    out += report.findings[i].symptom;
  }
  return out;
}

}  // namespace

PromptBundle build_cyclical_prompt(std::span<const DiagnosticReport> reports, const DateRange& window,
                                   const PromptLibrary& library) {
  if (reports.empty()) throw Error(ErrorCode::kDomain, "cyclical analysis needs at least one report");
  std::vector<const DiagnosticReport*> ordered;
  for (const auto& r : reports) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->created_at < b->created_at; });

  std::string lines;
  for (const auto* r : ordered) {
    if (!lines.empty()) lines.push_back('\n');
    lines += library.render("cyclical_line", {{"date", format_date(date_of(r->created_at))},
                                              {"binary", std::string(to_string(r->binary_class))},
                                              {"severity", std::string(to_string(r->severity))},
                                              {"subtype", r->subtype_category},
                                              {"symptoms", symptom_list(*r)}});
  }
  std::vector<PromptPart> parts;
  parts.push_back({"instruction", library.render("cyclical_instruction",
                                                 {{"from", format_date(window.from)},
                                                  {"to", format_date(window.to)}})});
  parts.push_back({"cot", std::move(lines)});
  parts.push_back({"query", library.get("cyclical_query")});
  PromptOptions options;
  options.locale = library.locale();
  return finish(PromptKind::kCyclicalAnalysis, std::move(parts), options);
}

PromptBundle build_advice_prompt(const DiagnosticReport& report, Role audience,
                                 const PromptLibrary& library) {
  const AdviceKind kind = advice_kind_for(audience);
  std::string symptoms;
  for (const auto& f : report.findings) {
    if (!symptoms.empty()) symptoms.push_back('\n');
    symptoms += library.render("advice_symptom_line",
                               {{"symptom", f.symptom},
                                {"criterion", f.criterion},
                                {"agreement", f.agreement ? "yes" : "no"}});
  }
  if (symptoms.empty()) symptoms = "- none reported";
  std::vector<PromptPart> parts;
  parts.push_back({"instruction", library.get(kind == AdviceKind::kTreatmentStrategy
                                                  ? "advice_patient_instruction"
                                                  : "advice_family_instruction")});
  parts.push_back({"cot", library.render("advice_summary",
                                         {{"binary", std::string(to_string(report.binary_class))},
                                          {"severity", std::string(to_string(report.severity))},
                                          {"subtype", report.subtype_category},
                                          {"symptoms", symptoms}})});
  parts.push_back({"query", library.get("advice_query")});
  PromptOptions options;
  options.locale = library.locale();
  return finish(PromptKind::kAdviceGeneration, std::move(parts), options);
}

}  // namespace cadence
