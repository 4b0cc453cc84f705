#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smdn/data_model.hpp"
#include "smdn/rejection.hpp"

namespace smdn {

/// Square count matrix, rows = gold class, columns = predicted class.
class ConfusionMatrix {
public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}
  ConfusionMatrix(std::size_t n, std::vector<std::uint64_t> counts);

  std::size_t size() const { return n_; }
  std::uint64_t operator()(std::size_t gold, std::size_t pred) const { return counts_[gold * n_ + pred]; }
  std::uint64_t& operator()(std::size_t gold, std::size_t pred) { return counts_[gold * n_ + pred]; }

  std::uint64_t row_sum(std::size_t gold) const;
  std::uint64_t col_sum(std::size_t pred) const;
  std::uint64_t total() const;

  /// TP / (TP + FP); 0 when the class was never predicted.
  double precision(std::size_t c) const;
  /// TP / (TP + FN); 0 when the class never occurs in gold.
  double recall(std::size_t c) const;
  /// Harmonic mean of precision and recall; 0 when both are 0.
  double f1(std::size_t c) const;

  const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> counts_;
};

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Macro precision and recall averaged over `class_subset`, then combined
/// into F1 = 2PR / (P + R).
MacroScores macro_scores(const ConfusionMatrix& confusion, std::span<const std::size_t> class_subset);
double macro_f1(const ConfusionMatrix& confusion, std::span<const std::size_t> class_subset);

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

/// Confusion over the N known classes plus unknown (index N, last).
struct EvalReport {
  std::vector<std::string> labels;
  ConfusionMatrix confusion;
  double macro_f1_all = 0.0;
  double macro_f1_known = 0.0;
  double f1_unknown = 0.0;
  std::vector<ClassScores> per_class;
};

/// Scores predictions against the test split of `gold`. Prediction ids must
/// cover the test ids exactly; throws ValidationError otherwise.
EvalReport evaluate(std::span<const OpenSetPrediction> predictions, const DatasetBundle& gold);

/// Builds the metrics from an already-filled confusion matrix.
EvalReport report_from_confusion(std::vector<std::string> labels, ConfusionMatrix confusion);

struct RunManifest {
  std::string run_id;
  std::uint64_t seed = 0;
  double known_ratio = 0.5;
  std::vector<std::string> known_classes;
  std::string sampler = "weighted_without_replacement";
};

/// Number of known classes for a ratio: round(ratio * n). Throws
/// PreconditionError when that is 0 or n.
std::size_t known_class_count(std::size_t n_classes, double ratio);

/// Weighted sampling without replacement with exponential keys: each class
/// draws u ~ U(0,1), key = u^(1/w), and the m largest keys win. Selected
/// classes are returned in label-space order.
RunManifest sample_known_classes(const LabelSpace& space, std::span<const std::size_t> train_counts,
                                 double ratio, std::uint64_t seed, std::string run_id = "run-0");

enum class LogitPolicy {
  /// Keep logit columns and mark the result requires_reexport.
  MarkReexport,
  /// Drop the logit columns of dropped classes.
  Project,
};

/// Drops train/val records of non-selected classes and relabels their test
/// records as unknown.
DatasetBundle restrict_bundle(const DatasetBundle& bundle, const RunManifest& manifest,
                              LogitPolicy policy = LogitPolicy::MarkReexport);

/// Mean and 95% normal interval (mean +- 1.96 * standard error) over runs.
struct Aggregate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> per_run;
};

Aggregate aggregate(std::span<const double> values);

}  // namespace smdn
