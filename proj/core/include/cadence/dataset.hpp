#pragma once

// Dataset construction: rewriting posts into counselling dialogues, joining
// dialogue corpora, labelling dialogues with generated reports and exporting
// instruction-tuning records.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cadence/domain.hpp"
#include "cadence/gateway.hpp"
#include "cadence/prompts.hpp"
#include "cadence/retrieval.hpp"

namespace cadence {

struct Post {
  std::string id;
  std::string text;
  SourceLabel label;
  std::string source;
};

enum class Provenance { kRewritten, kClinical };

struct DialogueCorpus {
  std::string id;
  Provenance provenance = Provenance::kClinical;
  std::vector<Dialogue> dialogues;
};

struct InstructionRecord {
  std::string instruction;  // rendered inference prompt, no priors
  std::string input;        // dialogue JSON
  std::string output;       // report body JSON

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

struct RewriteOptions {
  DialogueLimits limits;
  Timestamp base_time = 0;  // stamped on every turn, keeps datasets reproducible
  CompletionParams params;
};

/// Reads "User:" / "Counselor:" lines into alternating turns. Lines before
/// the first speaker line are ignored; unprefixed lines after it continue the
/// previous turn. Throws Error(kParse) on repeated speakers or no turns.
std::vector<Turn> parse_transcript(std::string_view transcript, Timestamp at = 0);

Dialogue rewrite_post_to_dialogue(const Post& post, ChatProvider& provider,
                                  const RewriteOptions& options = {},
                                  const PromptLibrary& library = PromptLibrary::builtin());

/// Counsellor opening, strict alternation, turn count within limits and
/// per-turn length cap. Violation fields: "opening", "alternation",
/// "turn count", "turn length".
std::vector<Violation> validate_rewritten_dialogue(const Dialogue& dialogue,
                                                   const DialogueLimits& limits = {});

/// d1 followed by d2; duplicate dialogue ids throw Error(kConflict).
DialogueCorpus assemble_chat_corpus(const DialogueCorpus& d1, const DialogueCorpus& d2);

struct LabeledPair {
  Dialogue dialogue;
  DiagnosticReport report;
};

struct QuarantinedRecord {
  std::string dialogue_id;
  std::string reason;
  std::vector<std::string> raw_outputs;
};

struct LabelingResult {
  std::vector<LabeledPair> pairs;
  std::vector<QuarantinedRecord> quarantined;
};

struct LabelingOptions {
  PromptOptions prompt_options;
  std::size_t workers = 1;
};

/// Generates a report for every dialogue from a prompt carrying its source
/// label, retrieved criteria and the severity standard. A report whose binary
/// class disagrees with the source label, or any generation failure, lands in
/// quarantine. Every dialogue must carry a usable label (Error(kDomain)).
LabelingResult build_report_labels(const DialogueCorpus& corpus, ChatProvider& provider,
                                   EmbeddingProvider& embedder, const CriteriaCorpus& criteria,
                                   const SeverityStandard& standard,
                                   const LabelingOptions& options = {},
                                   const PromptLibrary& library = PromptLibrary::builtin());

InstructionRecord make_instruction_record(const LabeledPair& pair, bool use_cot = true,
                                          const PromptLibrary& library = PromptLibrary::builtin());

void export_instruction_records(std::span<const InstructionRecord> records, std::ostream& out);
std::vector<InstructionRecord> import_instruction_records(std::istream& in);

struct TrainTestSplit {
  std::vector<std::size_t> train;  // ascending indices
  std::vector<std::size_t> test;
};

/// |test| = round(test_fraction * n), half away from zero. Reproducible for a
/// given seed on every platform. Throws Error(kDomain) if either side is empty.
TrainTestSplit split_train_test(std::size_t n, double test_fraction, std::uint64_t seed);

// JSONL files.
std::vector<Post> read_posts(const std::filesystem::path& path);
std::vector<Dialogue> read_dialogues(const std::filesystem::path& path);
void write_dialogues(std::span<const Dialogue> dialogues, std::ostream& out);
std::vector<LabeledPair> read_pairs(const std::filesystem::path& path);
void write_pairs(std::span<const LabeledPair> pairs, std::ostream& out);
void write_quarantine(std::span<const QuarantinedRecord> records, std::ostream& out);

}  // namespace cadence
