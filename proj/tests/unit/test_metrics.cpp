#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "cadence/metrics.hpp"
#include "cadence/random.hpp"
#include "support/oracles.hpp"

using namespace cadence;

namespace {

std::vector<std::string> split_chars(const std::string& s) {
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

double round_to(double v, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(v * scale) / scale;
}

}  // namespace

TEST(Confusion, CountsPairs) {
  const auto preds = split_chars("+++-");
  const auto truths = split_chars("+-++");
  EXPECT_EQ(confusion(preds, truths, "+"), (ConfusionCounts{2, 0, 1, 1}));
  const auto perfect = split_chars("++--");
  EXPECT_EQ(confusion(perfect, perfect, "+"), (ConfusionCounts{2, 2, 0, 0}));
}

TEST(Confusion, MismatchedLengthsThrow) {
  const auto a = split_chars("++");
  const auto b = split_chars("+");
  EXPECT_THROW(confusion(a, b, "+"), Error);
}

TEST(BinaryMetrics, ReferenceRowFromCounts) {
  const auto m = binary_metrics({22, 14, 3, 10});
  EXPECT_NEAR(*m.acc, 0.7347, 5e-5);
  EXPECT_NEAR(*m.pre, 0.8800, 5e-5);
  EXPECT_NEAR(*m.rec, 0.6875, 5e-5);
  EXPECT_NEAR(*m.f1, 0.7719, 5e-5);
  EXPECT_EQ(round_to(*m.acc, 3), 0.735);
  EXPECT_EQ(round_to(*m.pre, 3), 0.880);
  EXPECT_EQ(round_to(*m.rec, 3), 0.688);
  EXPECT_EQ(round_to(*m.f1, 3), 0.772);
}

TEST(BinaryMetrics, ReferenceRowHasOneMatrixOf49) {
  // Brute force every confusion matrix of 49 samples and keep those that
  // round to the reference three-decimal row.
  std::vector<ConfusionCounts> hits;
  for (std::size_t tp = 0; tp <= 49; ++tp) {
    for (std::size_t fp = 0; tp + fp <= 49; ++fp) {
      for (std::size_t fn = 0; tp + fp + fn <= 49; ++fn) {
        const ConfusionCounts c{tp, 49 - tp - fp - fn, fp, fn};
        const auto m = binary_metrics(c);
        if (m.acc && m.pre && m.rec && m.f1 && round_to(*m.acc, 3) == 0.735 && round_to(*m.pre, 3) == 0.880 &&
            round_to(*m.rec, 3) == 0.688 && round_to(*m.f1, 3) == 0.772) {
          hits.push_back(c);
        }
      }
    }
  }
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (ConfusionCounts{22, 14, 3, 10}));
}

TEST(BinaryMetrics, PerfectPredictor) {
  const auto m = binary_metrics({2, 2, 0, 0});
  EXPECT_EQ(*m.acc, 1.0);
  EXPECT_EQ(*m.pre, 1.0);
  EXPECT_EQ(*m.rec, 1.0);
  EXPECT_EQ(*m.f1, 1.0);
}

TEST(BinaryMetrics, ZeroDenominatorsAreUndefined) {
  const auto m = binary_metrics({0, 5, 0, 5});
  EXPECT_EQ(*m.acc, 0.5);
  EXPECT_FALSE(m.pre.has_value());
  EXPECT_EQ(*m.rec, 0.0);
  EXPECT_FALSE(m.f1.has_value());

  const auto no_positives = binary_metrics({0, 4, 0, 0});
  EXPECT_FALSE(no_positives.pre.has_value());
  EXPECT_FALSE(no_positives.rec.has_value());
  EXPECT_FALSE(no_positives.f1.has_value());

  EXPECT_THROW(binary_metrics({}), Error);
}

TEST(BinaryMetrics, MatchesPerSampleOracle) {
  StableRng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<std::string> preds, truths;
    for (std::size_t i = 0; i < n; ++i) {
      preds.push_back(rng.below(2) ? "depressed" : "not_depressed");
      truths.push_back(rng.below(2) ? "depressed" : "not_depressed");
    }
    const auto m = binary_metrics(confusion(preds, truths, "depressed"));
    const auto o = testkit::oracle_binary_metrics(preds, truths, "depressed");
    auto same = [](std::optional<double> a, std::optional<double> b) {
      return a.has_value() == b.has_value() && (!a || std::abs(*a - *b) < 1e-12);
    };
    EXPECT_TRUE(same(m.acc, o.acc)) << trial;
    EXPECT_TRUE(same(m.pre, o.pre)) << trial;
    EXPECT_TRUE(same(m.rec, o.rec)) << trial;
    EXPECT_TRUE(same(m.f1, o.f1)) << trial;
    if (m.f1) {
      EXPECT_GE(*m.f1, std::min(*m.pre, *m.rec) - 1e-12);
      EXPECT_LE(*m.f1, std::max(*m.pre, *m.rec) + 1e-12);
    }
  }
}

TEST(PerClassF1, OneVsRestExample) {
  const std::vector<std::string> classes{"N", "M", "D", "S"};
  const auto truths = split_chars("NNMS");
  const auto preds = split_chars("NMMS");
  const auto rows = per_class_f1(preds, truths, classes);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rows[0].support, 2u);
  EXPECT_NEAR(rows[1].f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rows[2].support, 0u);
  EXPECT_EQ(rows[2].f1, 0.0);
  EXPECT_FALSE(rows[2].f1_defined.has_value());
  EXPECT_EQ(rows[3].f1, 1.0);
  EXPECT_NEAR(weighted_f1(rows), 0.75, 1e-12);
}

TEST(PerClassF1, PerfectAndUnknownClasses) {
  const std::vector<std::string> classes{"N", "M", "D", "S"};
  const auto all = split_chars("NMDS");
  for (const auto& row : per_class_f1(all, all, classes)) EXPECT_EQ(row.f1, 1.0);
  const auto bad = split_chars("NMDX");
  EXPECT_THROW(per_class_f1(bad, all, classes), Error);
}

TEST(WeightedF1, SupportWeightedMean) {
  std::vector<ClassSupport> rows(2);
  rows[0].support = 3;
  rows[0].f1 = 0.5;
  rows[1].support = 1;
  rows[1].f1 = 1.0;
  EXPECT_NEAR(weighted_f1(rows), 0.625, 1e-15);
  rows.resize(1);
  rows[0].f1 = 0.37;
  EXPECT_NEAR(weighted_f1(rows), 0.37, 1e-15);
  rows[0].support = 0;
  EXPECT_THROW(weighted_f1(rows), Error);
}

TEST(StratifiedKFold, BalancedExample) {
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(i % 2 ? "pos" : "neg");
  const auto folds = stratified_kfold(labels, 5, 17);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& fold : folds) {
    ASSERT_EQ(fold.size(), 2u);
    EXPECT_NE(labels[fold[0]], labels[fold[1]]);
  }
  EXPECT_EQ(folds, stratified_kfold(labels, 5, 17));
}

TEST(StratifiedKFold, SmallCasesAndErrors) {
  const std::vector<std::string> one_class(4, "a");
  const auto folds = stratified_kfold(one_class, 2, 1);
  EXPECT_EQ(folds[0].size(), 2u);
  EXPECT_EQ(folds[1].size(), 2u);
  const std::vector<std::string> ten(10, "a");
  EXPECT_THROW(stratified_kfold(ten, 11, 1), Error);
  EXPECT_THROW(stratified_kfold(ten, 1, 1), Error);
}

TEST(StratifiedKFold, PartitionAndBalanceOnRandomLabels) {
  StableRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(n - 1, 9));
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
    const auto folds = stratified_kfold(labels, k, trial);
    ASSERT_EQ(folds.size(), k);
    std::set<std::size_t> seen;
    const std::set<std::string> classes(labels.begin(), labels.end());
    std::map<std::string, std::vector<std::size_t>> per_class;
    for (const auto& fold : folds) {
      EXPECT_TRUE(std::is_sorted(fold.begin(), fold.end()));
      std::map<std::string, std::size_t> counts;
      for (auto i : fold) {
        EXPECT_TRUE(seen.insert(i).second);
        ++counts[labels[i]];
      }
      for (const auto& l : classes) per_class[l].push_back(counts[l]);
    }
    EXPECT_EQ(seen.size(), n);
    for (const auto& [label, counts] : per_class) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      EXPECT_LE(*hi - *lo, 1u) << label;
    }
  }
}

TEST(EvalLabels, FromReport) {
  DiagnosticReport r;
  r.binary_class = BinaryClass::kDepressed;
  r.severity = SeverityDegree::kSevere;
  EXPECT_EQ(extract_eval_labels(r), std::make_pair(BinaryClass::kDepressed, SeverityDegree::kSevere));
}

TEST(EvalSamples, ReadAndAlign) {
  const auto dir = std::filesystem::temp_directory_path();
  std::ofstream(dir / "cadence_pred.jsonl") << R"({"id":"b","binary":"depressed","severity":"mild"})" << '\n'
                                           << R"({"id":"a","binary":"not_depressed","severity":"normal"})" << '\n';
  std::ofstream(dir / "cadence_truth.jsonl") << R"({"id":"a","binary":"not_depressed"})" << '\n'
                                            << R"({"id":"b","binary":"depressed"})" << '\n';
  const auto preds = read_eval_samples(dir / "cadence_pred.jsonl");
  const auto truths = read_eval_samples(dir / "cadence_truth.jsonl");
  const auto pairs = align_by_id(preds, truths);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].first.id, "a");
  EXPECT_EQ(pairs[1].first.severity, SeverityDegree::kMild);
  EXPECT_FALSE(pairs[0].second.severity.has_value());

  const std::vector<EvalSample> missing{truths[0]};
  try {
    align_by_id(missing, truths);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Tables, BinaryTextMarksUndefinedCells) {
  const std::vector<BinaryRow> rows{{"ours", {22, 14, 3, 10}, binary_metrics({22, 14, 3, 10})},
                                    {"silent", {0, 5, 0, 5}, binary_metrics({0, 5, 0, 5})}};
  const auto text = render_binary_text(rows);
  EXPECT_NE(text.find("0.7347"), std::string::npos);
  EXPECT_NE(text.find("undef*"), std::string::npos);
  EXPECT_NE(text.find("* undefined: zero denominator"), std::string::npos);
  const auto csv = render_binary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,tp,tn,fp,fn,acc,pre,rec,f1");
  EXPECT_NE(csv.find("ours,22,14,3,10,0.7347,0.8800,0.6875,0.7719"), std::string::npos);
  EXPECT_NE(csv.find("silent,0,5,0,5,0.5000,NA,0.0000,NA"), std::string::npos);

  const std::vector<BinaryRow> clean{rows[0]};
  EXPECT_EQ(render_binary_text(clean).find("undefined"), std::string::npos);
}

TEST(Tables, SeverityCsv) {
  const std::vector<std::string> classes{"normal", "mild", "moderate", "severe"};
  const std::vector<std::string> truths{"normal", "normal", "mild", "severe"};
  const std::vector<std::string> preds{"normal", "mild", "mild", "severe"};
  SeverityTable table;
  table.classes = per_class_f1(preds, truths, classes);
  table.weighted_f1 = weighted_f1(table.classes);
  table.accuracy = 0.75;
  const auto csv = render_severity_csv(table);
  EXPECT_NE(csv.find("class,support,pre,rec,f1\n"), std::string::npos);
  EXPECT_NE(csv.find("moderate,0,NA,NA,NA\n"), std::string::npos);
  EXPECT_NE(csv.find("accuracy,,,,0.7500\n"), std::string::npos);
  EXPECT_NE(csv.find("weighted_f1,,,,0.7500\n"), std::string::npos);
  EXPECT_NE(render_severity_text(table).find("counted as 0"), std::string::npos);
}
