#include "cadence/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "cadence/random.hpp"
#include "cadence/serialization.hpp"

namespace cadence {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

void check_lengths(std::size_t preds, std::size_t truths) {
  if (preds != truths) {
    throw Error(ErrorCode::kDomain, "predictions (" + std::to_string(preds) + ") and truths (" +
                                        std::to_string(truths) + ") differ in length");
  }
  if (preds == 0) throw Error(ErrorCode::kDomain, "no samples to evaluate");
}

std::string cell(std::optional<double> v, bool csv) {
  if (!v) return csv ? "NA" : "undef*";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

ConfusionCounts confusion(std::span<const std::string> preds, std::span<const std::string> truths,
                          const std::string& positive) {
  check_lengths(preds.size(), truths.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive;
    const bool t = truths[i] == positive;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricsResult binary_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::kDomain, "confusion counts are empty");
  MetricsResult m;
  m.acc = ratio(c.tp + c.tn, c.total());
  m.pre = ratio(c.tp, c.tp + c.fp);
  m.rec = ratio(c.tp, c.tp + c.fn);
  m.f1 = harmonic(m.pre, m.rec);
  return m;
}

std::vector<ClassSupport> per_class_f1(std::span<const std::string> preds,
                                       std::span<const std::string> truths,
                                       std::span<const std::string> classes) {
  check_lengths(preds.size(), truths.size());
  auto known = [&](const std::string& v) {
    return std::find(classes.begin(), classes.end(), v) != classes.end();
  };
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!known(preds[i])) throw Error(ErrorCode::kDomain, "unknown class \"" + preds[i] + "\"");
    if (!known(truths[i])) throw Error(ErrorCode::kDomain, "unknown class \"" + truths[i] + "\"");
  }
  std::vector<ClassSupport> out;
  for (const auto& cls : classes) {
    const ConfusionCounts c = confusion(preds, truths, cls);
    ClassSupport s;
    s.class_name = cls;
    s.support = c.tp + c.fn;
    s.precision = ratio(c.tp, c.tp + c.fp);
    s.recall = ratio(c.tp, c.tp + c.fn);
    s.f1_defined = harmonic(s.precision, s.recall);
    s.f1 = s.f1_defined.value_or(0.0);
    out.push_back(std::move(s));
  }
  return out;
}

double weighted_f1(std::span<const ClassSupport> supports) {
  std::size_t total = 0;
  for (const auto& s : supports) total += s.support;
  if (total == 0) throw Error(ErrorCode::kDomain, "total support is zero");
  double sum = 0.0;
  for (const auto& s : supports) sum += static_cast<double>(s.support) * s.f1;
  return sum / static_cast<double>(total);
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::string> labels,
                                                       std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kDomain, "k-fold needs k >= 2");
  if (k > labels.size()) {
    throw Error(ErrorCode::kDomain, "k = " + std::to_string(k) + " exceeds the " +
                                        std::to_string(labels.size()) + " items");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  StableRng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next_fold = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) {
      folds[next_fold].push_back(idx);
      next_fold = (next_fold + 1) % k;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

std::pair<BinaryClass, SeverityDegree> extract_eval_labels(const DiagnosticReport& report) {
  return {report.binary_class, report.severity};
}

std::vector<EvalSample> read_eval_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<EvalSample> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (is_blank(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    EvalSample s;
    if (!j.is_object() || !j.contains("id")) throw Error(ErrorCode::kParse, where + ": missing \"id\"");
    s.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (j.contains("binary") && !j["binary"].is_null()) {
      s.binary = parse_binary(j["binary"].get<std::string>());
      if (!s.binary) throw Error(ErrorCode::kParse, where + ": unknown binary value");
    }
    if (j.contains("severity") && !j["severity"].is_null()) {
      s.severity = parse_severity(j["severity"].get<std::string>());
      if (!s.severity) throw Error(ErrorCode::kParse, where + ": unknown severity value");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::pair<EvalSample, EvalSample>> align_by_id(std::span<const EvalSample> preds,
                                                           std::span<const EvalSample> truths) {
  std::unordered_map<std::string, const EvalSample*> index;
  for (const auto& p : preds) index.emplace(p.id, &p);
  std::vector<std::pair<EvalSample, EvalSample>> out;
  for (const auto& t : truths) {
    auto it = index.find(t.id);
    if (it == index.end()) throw Error(ErrorCode::kInvalidArgument, "no prediction for id " + t.id);
    out.emplace_back(*it->second, t);
  }
  return out;
}

std::string render_binary_text(std::span<const BinaryRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %5s %5s %5s %5s  %-8s %-8s %-8s %-8s\n", "model", "TP",
                "TN", "FP", "FN", "ACC", "PRE", "REC", "F1");
  out << line;
  bool undefined = false;
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    undefined |= !m.acc || !m.pre || !m.rec || !m.f1;
    std::snprintf(line, sizeof line, "%-16s %5zu %5zu %5zu %5zu  %-8s %-8s %-8s %-8s\n",
                  r.name.c_str(), r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn,
                  cell(m.acc, false).c_str(), cell(m.pre, false).c_str(),
                  cell(m.rec, false).c_str(), cell(m.f1, false).c_str());
    out << line;
  }
  if (undefined) out << "* undefined: zero denominator\n";
  return out.str();
}

std::string render_binary_csv(std::span<const BinaryRow> rows) {
  std::ostringstream out;
  out << "model,tp,tn,fp,fn,acc,pre,rec,f1\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.name << ',' << r.counts.tp << ',' << r.counts.tn << ',' << r.counts.fp << ','
        << r.counts.fn << ',' << cell(m.acc, true) << ',' << cell(m.pre, true) << ','
        << cell(m.rec, true) << ',' << cell(m.f1, true) << '\n';
  }
  return out.str();
}

std::string render_severity_text(const SeverityTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %7s  %-8s %-8s %-8s\n", "class", "support", "PRE", "REC", "F1");
  out << line;
  bool undefined = false;
  for (const auto& c : table.classes) {
    undefined |= !c.precision || !c.recall || !c.f1_defined;
    std::snprintf(line, sizeof line, "%-10s %7zu  %-8s %-8s %-8s\n", c.class_name.c_str(), c.support,
                  cell(c.precision, false).c_str(), cell(c.recall, false).c_str(),
                  cell(c.f1_defined, false).c_str());
    out << line;
  }
  out << "accuracy    " << cell(table.accuracy, false) << '\n';
  out << "weighted-F1 " << cell(table.weighted_f1, false) << '\n';
  if (undefined) out << "* undefined: zero denominator; counted as 0 in weighted-F1\n";
  return out.str();
}

std::string render_severity_csv(const SeverityTable& table) {
  std::ostringstream out;
  out << "class,support,pre,rec,f1\n";
  for (const auto& c : table.classes) {
    out << c.class_name << ',' << c.support << ',' << cell(c.precision, true) << ','
        << cell(c.recall, true) << ',' << cell(c.f1_defined, true) << '\n';
  }
  out << "accuracy,," << ",," << cell(table.accuracy, true) << '\n';
  out << "weighted_f1,,,," << cell(table.weighted_f1, true) << '\n';
  return out.str();
}

}  // namespace cadence
