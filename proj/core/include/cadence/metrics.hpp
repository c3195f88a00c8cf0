#pragma once

// Classification metrics for binary and severity evaluation, stratified
// k-fold splitting and plain-text/CSV tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cadence/domain.hpp"

namespace cadence {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A metric with a zero denominator is std::nullopt; an undefined PRE or
/// REC makes F1 undefined too.
struct MetricsResult {
  std::optional<double> acc;
  std::optional<double> pre;
  std::optional<double> rec;
  std::optional<double> f1;
};

struct ClassSupport {
  std::string class_name;
  std::size_t support = 0;  // samples whose truth is this class
  double f1 = 0.0;          // undefined F1 counts as 0
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1_defined;
};

ConfusionCounts confusion(std::span<const std::string> preds, std::span<const std::string> truths,
                          const std::string& positive);

/// Throws Error(kDomain) when the counts are all zero.
MetricsResult binary_metrics(const ConfusionCounts& counts);

/// One-vs-rest counts for every class. Values outside classes throw
/// Error(kDomain).
std::vector<ClassSupport> per_class_f1(std::span<const std::string> preds,
                                       std::span<const std::string> truths,
                                       std::span<const std::string> classes);

/// Sum over classes of (support / total) * F1. Throws on zero total support.
double weighted_f1(std::span<const ClassSupport> supports);

/// k folds of item indices (each ascending). Items are grouped by label,
/// shuffled per class with the seed and dealt round-robin so per-class counts
/// differ by at most one between folds.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::string> labels,
                                                       std::size_t k, std::uint64_t seed);

std::pair<BinaryClass, SeverityDegree> extract_eval_labels(const DiagnosticReport& report);

/// One row of a prediction or truth file: {"id", "binary", "severity"}.
struct EvalSample {
  std::string id;
  std::optional<BinaryClass> binary;
  std::optional<SeverityDegree> severity;
};

std::vector<EvalSample> read_eval_samples(const std::filesystem::path& path);

/// Matches predictions to truths by id, in truth order. Throws
/// Error(kInvalidArgument) when a truth id has no prediction.
std::vector<std::pair<EvalSample, EvalSample>> align_by_id(std::span<const EvalSample> preds,
                                                           std::span<const EvalSample> truths);

struct BinaryRow {
  std::string name;
  ConfusionCounts counts;
  MetricsResult metrics;
};

struct SeverityTable {
  std::vector<ClassSupport> classes;
  double weighted_f1 = 0.0;
  std::optional<double> accuracy;
};

std::string render_binary_text(std::span<const BinaryRow> rows);
std::string render_binary_csv(std::span<const BinaryRow> rows);
std::string render_severity_text(const SeverityTable& table);
std::string render_severity_csv(const SeverityTable& table);

}  // namespace cadence
