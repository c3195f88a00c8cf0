#include "cadence/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "cadence/random.hpp"
#include "cadence/serialization.hpp"

namespace cadence {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Recognises a speaker prefix, tolerating markdown emphasis around it.
std::optional<Speaker> speaker_prefix(std::string_view& line) {
  std::string_view s = line;
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
  static constexpr std::pair<std::string_view, Speaker> kPrefixes[] = {
      {"User", Speaker::kUser},
      {"Counselor", Speaker::kAssistant},
      {"Counsellor", Speaker::kAssistant},
  };
  for (const auto& [name, speaker] : kPrefixes) {
    if (s.size() <= name.size() || s.substr(0, name.size()) != name) continue;
    std::string_view rest = s.substr(name.size());
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
    line = trim(rest);
    return speaker;
  }
  return std::nullopt;
}

template <typename T, typename Fn>
std::vector<T> read_jsonl(const std::filesystem::path& path, Fn&& convert) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (is_blank(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      out.push_back(convert(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    } catch (const FieldError& e) {
      throw FieldError(e.fields(), where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<Turn> parse_transcript(std::string_view transcript, Timestamp at) {
  std::vector<Turn> turns;
  std::size_t start = 0;
  while (start <= transcript.size()) {
    auto end = transcript.find('\n', start);
    if (end == std::string_view::npos) end = transcript.size();
    std::string_view line = trim(transcript.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (auto speaker = speaker_prefix(line)) {
      if (!turns.empty() && turns.back().speaker == *speaker) {
        throw Error(ErrorCode::kParse, "transcript turn " + std::to_string(turns.size() + 1) +
                                           " repeats the previous speaker");
      }
      turns.push_back({*speaker, std::string(line), at});
    } else if (!turns.empty()) {
      if (!turns.back().text.empty()) turns.back().text.push_back('\n');
      turns.back().text.append(line);
    }
  }
  if (turns.empty()) throw Error(ErrorCode::kParse, "transcript contains no speaker lines");
  return turns;
}

Dialogue rewrite_post_to_dialogue(const Post& post, ChatProvider& provider,
                                  const RewriteOptions& options, const PromptLibrary& library) {
  if (post.id.empty()) throw Error(ErrorCode::kDomain, "post id is empty");
  if (is_blank(post.text)) throw Error(ErrorCode::kDomain, "post " + post.id + " is empty");
  const PromptBundle prompt = build_dialogue_rewrite_prompt(post.text, options.limits, library);
  const std::vector<ChatMessage> messages{{ChatRole::kUser, prompt.rendered}};
  const std::string transcript = complete_chat(messages, options.params, provider);

  Dialogue dialogue;
  dialogue.id = post.id;
  dialogue.subject_role = Role::kPatient;
  dialogue.turns = parse_transcript(transcript, options.base_time);
  dialogue.day = date_of(options.base_time);
  dialogue.label = post.label;
  auto violations = validate_rewritten_dialogue(dialogue, options.limits);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return dialogue;
}

std::vector<Violation> validate_rewritten_dialogue(const Dialogue& dialogue,
                                                   const DialogueLimits& limits) {
  std::vector<Violation> out;
  if (dialogue.turns.empty() || dialogue.turns.front().speaker != Speaker::kAssistant) {
    out.push_back({"opening", "dialogue must open with the counsellor"});
  }
  for (std::size_t i = 1; i < dialogue.turns.size(); ++i) {
    if (dialogue.turns[i].speaker == dialogue.turns[i - 1].speaker) {
      out.push_back({"alternation", "turn " + std::to_string(i) + " repeats the previous speaker"});
      break;
    }
  }
  const auto n = dialogue.turns.size();
  if (n < limits.min_turns || n > limits.max_turns) {
    out.push_back({"turn count", std::to_string(n) + " turns outside [" +
                                     std::to_string(limits.min_turns) + ", " +
                                     std::to_string(limits.max_turns) + "]"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& text = dialogue.turns[i].text;
    if (is_blank(text)) out.push_back({"turn length", "turn " + std::to_string(i) + " is blank"});
    if (text.size() > limits.max_turn_chars) {
      out.push_back({"turn length", "turn " + std::to_string(i) + " has " +
                                        std::to_string(text.size()) + " characters"});
    }
  }
  return out;
}

DialogueCorpus assemble_chat_corpus(const DialogueCorpus& d1, const DialogueCorpus& d2) {
  DialogueCorpus out;
  out.id = d1.id.empty() ? d2.id : (d2.id.empty() ? d1.id : d1.id + "+" + d2.id);
  out.provenance = d1.provenance;
  std::set<std::string> ids;
  for (const auto* corpus : {&d1, &d2}) {
    for (const auto& d : corpus->dialogues) {
      if (!ids.insert(d.id).second) {
        throw Error(ErrorCode::kConflict, "dialogue id \"" + d.id + "\" appears in both corpora");
      }
      out.dialogues.push_back(d);
    }
  }
  if (d1.dialogues.empty()) out.provenance = d2.provenance;
  return out;
}

LabelingResult build_report_labels(const DialogueCorpus& corpus, ChatProvider& provider,
                                   EmbeddingProvider& embedder, const CriteriaCorpus& criteria,
                                   const SeverityStandard& standard, const LabelingOptions& options,
                                   const PromptLibrary& library) {
  for (const auto& d : corpus.dialogues) {
    if (!d.label || !d.label->effective_binary()) {
      throw Error(ErrorCode::kDomain, "dialogue " + d.id + " has no source label");
    }
  }

  struct Outcome {
    std::optional<LabeledPair> pair;
    std::optional<QuarantinedRecord> quarantined;
  };
  std::vector<Outcome> outcomes(corpus.dialogues.size());

  auto label_one = [&](std::size_t i) {
    const Dialogue& d = corpus.dialogues[i];
    Outcome& outcome = outcomes[i];
    try {
      std::optional<RetrievalResult> retrieved;
      if (options.prompt_options.use_rag) {
        retrieved = retrieve_criteria(extract_user_content(d), criteria, embedder);
      }
      const PromptBundle prompt =
          build_report_prompt(d, *d.label, retrieved ? &retrieved->document : nullptr, standard,
                              options.prompt_options, library);
      ReportReply reply = request_report(prompt.rendered, provider, CompletionParams::for_reports(),
                                         library.get("corrective_json"));
      DiagnosticReport report = std::move(reply.report);
      report.id = "label-" + d.id;
      report.dialogue_ids = {d.id};
      report.created_at = 0;
      const BinaryClass expected = *d.label->effective_binary();
      if (report.binary_class != expected) {
        outcome.quarantined = QuarantinedRecord{
            d.id,
            "label mismatch: report says " + std::string(to_string(report.binary_class)) +
                ", source label says " + std::string(to_string(expected)),
            {reply.raw}};
        return;
      }
      outcome.pair = LabeledPair{d, std::move(report)};
    } catch (const ReportGenerationError& e) {
      outcome.quarantined = QuarantinedRecord{d.id, e.what(), e.raw_outputs()};
    } catch (const Error& e) {
      outcome.quarantined = QuarantinedRecord{d.id, e.what(), {}};
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, corpus.dialogues.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) label_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < corpus.dialogues.size(); i = next++) label_one(i);
      });
    }
  }

  LabelingResult result;
  for (auto& outcome : outcomes) {
    if (outcome.pair) result.pairs.push_back(std::move(*outcome.pair));
    if (outcome.quarantined) result.quarantined.push_back(std::move(*outcome.quarantined));
  }
  return result;
}

InstructionRecord make_instruction_record(const LabeledPair& pair, bool use_cot,
                                          const PromptLibrary& library) {
  PromptOptions options;
  options.use_rag = false;
  options.use_cot = use_cot;
  options.locale = library.locale();
  // The source label is a prior; it stays out of the training input.
  Dialogue input = pair.dialogue;
  input.label.reset();
  return {build_inference_prompt(input, options, library).rendered, Json(input).dump(),
          report_body_json(pair.report).dump()};
}

void export_instruction_records(std::span<const InstructionRecord> records, std::ostream& out) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["instruction"] = r.instruction;
    j["input"] = r.input;
    j["output"] = r.output;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed to write instruction records");
}

std::vector<InstructionRecord> import_instruction_records(std::istream& in) {
  std::vector<InstructionRecord> records;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (is_blank(line)) continue;
    try {
      const Json j = Json::parse(line);
      records.push_back({j.at("instruction").get<std::string>(), j.at("input").get<std::string>(),
                         j.at("output").get<std::string>()});
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, "instruction record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

TrainTestSplit split_train_test(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kDomain, "test fraction must lie strictly between 0 and 1");
  }
  const auto test_n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (test_n == 0 || test_n >= n) {
    throw Error(ErrorCode::kDomain, "split of " + std::to_string(n) + " items at " +
                                        std::to_string(test_fraction) + " leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  StableRng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  TrainTestSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_n));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_n), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<Post> read_posts(const std::filesystem::path& path) {
  return read_jsonl<Post>(path, [](const Json& j) {
    Post post;
    post.id = j.at("id").get<std::string>();
    post.text = j.at("text").get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) post.label = j["label"].get<SourceLabel>();
    post.source = j.value("source", "");
    return post;
  });
}

std::vector<Dialogue> read_dialogues(const std::filesystem::path& path) {
  return read_jsonl<Dialogue>(path, [](const Json& j) { return j.get<Dialogue>(); });
}

void write_dialogues(std::span<const Dialogue> dialogues, std::ostream& out) {
  for (const auto& d : dialogues) out << Json(d).dump() << '\n';
}

std::vector<LabeledPair> read_pairs(const std::filesystem::path& path) {
  return read_jsonl<LabeledPair>(path, [](const Json& j) {
    return LabeledPair{j.at("dialogue").get<Dialogue>(), report_from_json(j.at("report"))};
  });
}

void write_pairs(std::span<const LabeledPair> pairs, std::ostream& out) {
  for (const auto& p : pairs) out << Json{{"dialogue", p.dialogue}, {"report", p.report}}.dump() << '\n';
}

void write_quarantine(std::span<const QuarantinedRecord> records, std::ostream& out) {
  for (const auto& q : records) {
    out << Json{{"dialogue_id", q.dialogue_id}, {"reason", q.reason}, {"raw_outputs", q.raw_outputs}}.dump()
        << '\n';
  }
}

}  // namespace cadence
