// Command-line front end: report generation, dataset construction,
// evaluation and the HTTP service.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cadence/config.hpp"
#include "cadence/dataset.hpp"
#include "cadence/http_api.hpp"
#include "cadence/metrics.hpp"
#include "cadence/serialization.hpp"

namespace {

using namespace cadence;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A dialogue file holds one JSON object, pretty-printed or on one line.
Dialogue read_one_dialogue(const fs::path& path) {
  try {
    return Json::parse(slurp(path)).get<Dialogue>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

std::vector<std::string> read_jsonl_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!is_blank(line)) lines.push_back(line);
  }
  return lines;
}

struct Components {
  AppConfig config;
  std::unique_ptr<ChatProvider> chat;
  std::unique_ptr<EmbeddingProvider> embedder;
  PromptLibrary library;

  explicit Components(const fs::path& config_path)
      : config(load_config(config_path)),
        chat(make_chat_provider(config.gateway)),
        embedder(make_embedder(config.embedding)),
        library(load_prompt_library(config)) {}
};

// ---------------------------------------------------------------------------

struct ReportArgs {
  fs::path config;
  fs::path patient;
  fs::path family;
  fs::path out;
};

int run_report(const ReportArgs& args) {
  Components c(args.config);
  ReportPipeline pipeline(*c.chat, *c.embedder, load_corpus(c.config.corpus_path),
                          load_severity_standard(c.config.severity_standard_path), c.config.pipeline, c.library);
  std::optional<Dialogue> patient;
  std::optional<Dialogue> family;
  if (!args.patient.empty()) patient = read_one_dialogue(args.patient);
  if (!args.family.empty()) family = read_one_dialogue(args.family);
  if (!patient && !family) throw Error(ErrorCode::kInvalidArgument, "give a patient and/or family dialogue");
  const GenerationResult result = pipeline.generate(patient ? &*patient : nullptr, family ? &*family : nullptr);
  const std::string text = Json(result.report).dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    open_out(args.out) << text;
  }
  return 0;
}

struct RewriteArgs {
  fs::path config;
  fs::path posts;
  fs::path out;
  Timestamp base_time = 0;
};

int run_rewrite(const RewriteArgs& args) {
  Components c(args.config);
  RewriteOptions options;
  options.base_time = args.base_time;
  options.params = c.config.gateway.params;
  std::vector<Dialogue> dialogues;
  std::size_t failed = 0;
  for (const auto& post : read_posts(args.posts)) {
    try {
      dialogues.push_back(rewrite_post_to_dialogue(post, *c.chat, options, c.library));
    } catch (const Error& e) {
      ++failed;
      std::cerr << "skipped " << post.id << ": " << e.what() << "\n";
    }
  }
  auto out = open_out(args.out);
  write_dialogues(dialogues, out);
  std::cerr << "rewrote " << dialogues.size() << " posts, skipped " << failed << "\n";
  return 0;
}

struct LabelArgs {
  fs::path config;
  fs::path dialogues;
  fs::path corpus;
  fs::path out;
  fs::path quarantine;
  std::size_t workers = 1;
  std::string provenance = "rewritten";
};

int run_label(const LabelArgs& args) {
  Components c(args.config);
  DialogueCorpus corpus;
  corpus.id = args.dialogues.stem().string();
  corpus.provenance = args.provenance == "clinical" ? Provenance::kClinical : Provenance::kRewritten;
  corpus.dialogues = read_dialogues(args.dialogues);
  const CriteriaCorpus criteria = load_corpus(args.corpus.empty() ? c.config.corpus_path : args.corpus);
  LabelingOptions options;
  options.prompt_options = c.config.pipeline.prompt_options;
  options.workers = args.workers;
  const LabelingResult result =
      build_report_labels(corpus, *c.chat, *c.embedder, criteria,
                          load_severity_standard(c.config.severity_standard_path), options, c.library);
  {
    auto out = open_out(args.out);
    write_pairs(result.pairs, out);
  }
  fs::path quarantine = args.quarantine;
  if (quarantine.empty()) quarantine = fs::path(args.out).replace_extension(".quarantine.jsonl");
  {
    auto out = open_out(quarantine);
    write_quarantine(result.quarantined, out);
  }
  std::cerr << "labelled " << result.pairs.size() << ", quarantined " << result.quarantined.size() << " ("
            << quarantine.string() << ")\n";
  return 0;
}

int run_export(const fs::path& pairs_path, const fs::path& out_path, bool use_cot) {
  std::vector<InstructionRecord> records;
  for (const auto& pair : read_pairs(pairs_path)) records.push_back(make_instruction_record(pair, use_cot));
  auto out = open_out(out_path);
  export_instruction_records(records, out);
  std::cerr << "exported " << records.size() << " records\n";
  return 0;
}

struct SplitArgs {
  fs::path in;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  fs::path train_out;
  fs::path test_out;
};

int run_split(SplitArgs args) {
  const auto lines = read_jsonl_lines(args.in);
  const TrainTestSplit split = split_train_test(lines.size(), args.test_fraction, args.seed);
  const fs::path stem = fs::path(args.in).replace_extension();
  if (args.train_out.empty()) args.train_out = stem.string() + ".train.jsonl";
  if (args.test_out.empty()) args.test_out = stem.string() + ".test.jsonl";
  auto write = [&](const fs::path& path, const std::vector<std::size_t>& indices) {
    auto out = open_out(path);
    for (auto i : indices) out << lines[i] << "\n";
  };
  write(args.train_out, split.train);
  write(args.test_out, split.test);
  std::cout << "train " << split.train.size() << " test " << split.test.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path pred;
  fs::path truth;
  bool csv = false;
};

int run_eval_binary(const EvalArgs& args) {
  const auto preds = read_eval_samples(args.pred);
  const auto truths = read_eval_samples(args.truth);
  std::vector<std::string> p;
  std::vector<std::string> t;
  for (const auto& [pred, truth] : align_by_id(preds, truths)) {
    if (!pred.binary || !truth.binary) {
      throw Error(ErrorCode::kInvalidArgument, "sample " + truth.id + " has no binary label");
    }
    p.emplace_back(to_string(*pred.binary));
    t.emplace_back(to_string(*truth.binary));
  }
  BinaryRow row;
  row.name = args.pred.stem().string();
  row.counts = confusion(p, t, std::string(to_string(BinaryClass::kDepressed)));
  row.metrics = binary_metrics(row.counts);
  const std::vector<BinaryRow> rows{row};
  std::cout << (args.csv ? render_binary_csv(rows) : render_binary_text(rows));
  return 0;
}

int run_eval_severity(const EvalArgs& args) {
  const auto preds = read_eval_samples(args.pred);
  const auto truths = read_eval_samples(args.truth);
  std::vector<std::string> p;
  std::vector<std::string> t;
  std::size_t correct = 0;
  for (const auto& [pred, truth] : align_by_id(preds, truths)) {
    if (!pred.severity || !truth.severity) {
      throw Error(ErrorCode::kInvalidArgument, "sample " + truth.id + " has no severity label");
    }
    p.emplace_back(to_string(*pred.severity));
    t.emplace_back(to_string(*truth.severity));
    if (p.back() == t.back()) ++correct;
  }
  std::vector<std::string> classes;
  for (auto s : {SeverityDegree::kNormal, SeverityDegree::kMild, SeverityDegree::kModerate, SeverityDegree::kSevere}) {
    classes.emplace_back(to_string(s));
  }
  SeverityTable table;
  table.classes = per_class_f1(p, t, classes);
  table.weighted_f1 = weighted_f1(table.classes);
  if (!t.empty()) table.accuracy = static_cast<double>(correct) / static_cast<double>(t.size());
  std::cout << (args.csv ? render_severity_csv(table) : render_severity_text(table));
  return 0;
}

int run_kfold(const fs::path& in, std::size_t k, std::uint64_t seed, const std::string& by) {
  const auto samples = read_eval_samples(in);
  std::vector<std::string> labels;
  for (const auto& s : samples) {
    if (by == "binary") {
      if (!s.binary) throw Error(ErrorCode::kInvalidArgument, "sample " + s.id + " has no binary label");
      labels.emplace_back(to_string(*s.binary));
    } else {
      if (!s.severity) throw Error(ErrorCode::kInvalidArgument, "sample " + s.id + " has no severity label");
      labels.emplace_back(to_string(*s.severity));
    }
  }
  const auto folds = stratified_kfold(labels, k, seed);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Json ids = Json::array();
    for (auto i : folds[f]) ids.push_back(samples[i].id);
    std::cout << Json{{"fold", f}, {"ids", ids}}.dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_serve(const fs::path& config_path, const std::string& host, int port) {
  // Block termination signals before any thread starts so only the waiter sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Runtime runtime(load_config(config_path));
  HttpApi api(*runtime.service);
  const int bound = api.bind(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;

  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    api.stop();
  });
  api.listen();
  // listen() may also return on a socket error; wake the waiter then.
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  runtime.service->wait_all_jobs();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depression assessment toolkit: reports, datasets, evaluation and service"};
  app.require_subcommand(1);

  // report generate
  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Diagnostic report generation");
  report->require_subcommand(1);
  auto* generate = report->add_subcommand("generate", "Generate a report from dialogue files");
  generate->add_option("--config", report_args.config, "Config file")->required()->check(CLI::ExistingFile);
  generate->add_option("--patient-dialogue", report_args.patient, "Patient dialogue JSON")->check(CLI::ExistingFile);
  generate->add_option("--family-dialogue", report_args.family, "Family dialogue JSON")->check(CLI::ExistingFile);
  generate->add_option("--out", report_args.out, "Write the report here instead of stdout");

  // dataset ...
  auto* dataset = app.add_subcommand("dataset", "Dataset construction");
  dataset->require_subcommand(1);

  RewriteArgs rewrite_args;
  auto* rewrite = dataset->add_subcommand("rewrite", "Rewrite labelled posts into dialogues");
  rewrite->add_option("--config", rewrite_args.config, "Config file")->required()->check(CLI::ExistingFile);
  rewrite->add_option("--posts", rewrite_args.posts, "Posts JSONL")->required()->check(CLI::ExistingFile);
  rewrite->add_option("--out", rewrite_args.out, "Dialogue JSONL")->required();
  rewrite->add_option("--base-time", rewrite_args.base_time, "Timestamp stamped on every turn");

  LabelArgs label_args;
  auto* label = dataset->add_subcommand("label", "Generate report labels for labelled dialogues");
  label->add_option("--config", label_args.config, "Config file")->required()->check(CLI::ExistingFile);
  label->add_option("--dialogues", label_args.dialogues, "Dialogue JSONL")->required()->check(CLI::ExistingFile);
  label->add_option("--corpus", label_args.corpus, "Criteria corpus JSONL (overrides the config)")
      ->check(CLI::ExistingFile);
  label->add_option("--out", label_args.out, "Pairs JSONL")->required();
  label->add_option("--quarantine", label_args.quarantine, "Quarantine JSONL (default: next to --out)");
  label->add_option("--workers", label_args.workers, "Parallel model calls")->check(CLI::Range(1, 64));
  label->add_option("--provenance", label_args.provenance, "Dialogue origin")
      ->check(CLI::IsMember({"rewritten", "clinical"}));

  fs::path export_pairs;
  fs::path export_out;
  bool export_direct = false;
  auto* exporter = dataset->add_subcommand("export", "Export pairs as instruction records");
  exporter->add_option("--pairs", export_pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  exporter->add_option("--out", export_out, "Instruction JSONL")->required();
  exporter->add_flag("--direct", export_direct, "Use the direct instruction instead of step-by-step");

  SplitArgs split_args;
  auto* split = dataset->add_subcommand("split", "Seeded train/test split of a JSONL file");
  split->add_option("--in", split_args.in, "Input JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--test", split_args.test_fraction, "Test fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_args.seed, "Shuffle seed");
  split->add_option("--train-out", split_args.train_out, "Train JSONL");
  split->add_option("--test-out", split_args.test_out, "Test JSONL");

  // eval ...
  auto* eval = app.add_subcommand("eval", "Evaluation");
  eval->require_subcommand(1);
  EvalArgs eval_args;
  auto* eval_binary = eval->add_subcommand("binary", "ACC/PRE/REC/F1 for depressed vs not depressed");
  auto* eval_severity = eval->add_subcommand("severity", "Per-class and weighted F1 for severity");
  for (auto* sub : {eval_binary, eval_severity}) {
    sub->add_option("--pred", eval_args.pred, "Predictions JSONL {id, binary, severity}")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--truth", eval_args.truth, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
    sub->add_flag("--csv", eval_args.csv, "CSV instead of a text table");
  }
  fs::path kfold_in;
  std::size_t kfold_k = 5;
  std::uint64_t kfold_seed = 0;
  std::string kfold_by = "severity";
  auto* kfold = eval->add_subcommand("kfold", "Stratified k-fold assignment");
  kfold->add_option("--in", kfold_in, "Samples JSONL")->required()->check(CLI::ExistingFile);
  kfold->add_option("--k", kfold_k, "Number of folds");
  kfold->add_option("--seed", kfold_seed, "Shuffle seed");
  kfold->add_option("--by", kfold_by, "Stratify on")->check(CLI::IsMember({"severity", "binary"}));

  // serve
  fs::path serve_config;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", serve_config, "Config file")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return run_report(report_args);
    if (rewrite->parsed()) return run_rewrite(rewrite_args);
    if (label->parsed()) return run_label(label_args);
    if (exporter->parsed()) return run_export(export_pairs, export_out, !export_direct);
    if (split->parsed()) return run_split(split_args);
    if (eval_binary->parsed()) return run_eval_binary(eval_args);
    if (eval_severity->parsed()) return run_eval_severity(eval_args);
    if (kfold->parsed()) return run_kfold(kfold_in, kfold_k, kfold_seed, kfold_by);
    if (serve->parsed()) return run_serve(serve_config, serve_host, serve_port);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
