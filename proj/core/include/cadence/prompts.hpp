#pragma once

// Prompt assembly. Every prompt is an ordered list of named parts
// (instruction, then rules or chain-of-thought, then query) rendered from
// text templates with {{slot}} placeholders.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cadence/domain.hpp"
#include "cadence/retrieval.hpp"

namespace cadence {

enum class PromptKind {
  kDialogueRewrite,
  kReportWithPriors,
  kReportInference,
  kCounselorPersona,
  kCyclicalAnalysis,
  kAdviceGeneration,
};

std::string_view to_string(PromptKind kind);

struct PromptOptions {
  bool use_rag = true;
  bool use_cot = true;
  std::string locale = "en";

  friend bool operator==(const PromptOptions&, const PromptOptions&) = default;
};

struct PromptPart {
  std::string name;  // "instruction", "rules", "cot" or "query"
  std::string text;
};

struct PromptBundle {
  PromptKind kind = PromptKind::kReportInference;
  std::vector<PromptPart> parts;
  std::string rendered;
  bool contains_priors = false;
  PromptOptions options;

  const std::string& part(std::string_view name) const;

  /// Parts joined in order with a blank line between them.
  static std::string join(const std::vector<PromptPart>& parts);
};

/// Named templates for one locale. Substitution is literal and single-pass:
/// slot values are inserted verbatim and never re-scanned for placeholders.
class PromptLibrary {
 public:
  /// Templates compiled into the library.
  static const PromptLibrary& builtin();

  /// Builtin templates overridden by any <dir>/<locale>/<name>.txt present.
  static PromptLibrary load(const std::filesystem::path& dir, std::string locale);

  const std::string& locale() const noexcept { return locale_; }
  const std::string& get(std::string_view name) const;

  /// Throws Error(kInvalidArgument) if a placeholder has no value.
  std::string render(std::string_view name, const std::map<std::string, std::string>& slots) const;

  static std::string substitute(std::string_view tmpl,
                                const std::map<std::string, std::string>& slots);

 private:
  std::string locale_;
  std::map<std::string, std::string, std::less<>> templates_;
};

struct DialogueLimits {
  std::size_t min_turns = 4;
  std::size_t max_turns = 20;
  std::size_t max_turn_chars = 600;
};

/// The exact label text injected into report prompts with priors.
std::string label_literal(const SourceLabel& label);

/// Dialogue lines as "User: ..." / "Counselor: ...".
std::string render_transcript(const Dialogue& dialogue,
                              const PromptLibrary& library = PromptLibrary::builtin());

PromptBundle build_dialogue_rewrite_prompt(std::string_view post, const DialogueLimits& limits = {},
                                           const PromptLibrary& library = PromptLibrary::builtin());

/// Report prompt carrying priors: source label, retrieved criteria (when
/// options.use_rag) and the severity standard. criteria may be null only
/// when use_rag is false.
PromptBundle build_report_prompt(const Dialogue& dialogue, const SourceLabel& label,
                                 const CriteriaDocument* criteria, const SeverityStandard& standard,
                                 const PromptOptions& options,
                                 const PromptLibrary& library = PromptLibrary::builtin());

/// Report prompt without priors. With options.use_rag and a retrieved
/// document the criteria section is included; label and severity standard
/// never are.
PromptBundle build_inference_prompt(std::span<const Dialogue> dialogues, const PromptOptions& options,
                                    const CriteriaDocument* retrieved = nullptr,
                                    const PromptLibrary& library = PromptLibrary::builtin());

PromptBundle build_inference_prompt(const Dialogue& dialogue, const PromptOptions& options,
                                    const PromptLibrary& library = PromptLibrary::builtin());

PromptBundle build_counselor_persona(Role subject_role, const PromptOptions& options = {},
                                     const PromptLibrary& library = PromptLibrary::builtin());

/// One dated summary line per report; raw dialogue text never appears.
PromptBundle build_cyclical_prompt(std::span<const DiagnosticReport> reports, const DateRange& window,
                                   const PromptLibrary& library = PromptLibrary::builtin());

/// Built from report fields only; finding evidence quotes are left out.
PromptBundle build_advice_prompt(const DiagnosticReport& report, Role audience,
                                 const PromptLibrary& library = PromptLibrary::builtin());

}  // namespace cadence
