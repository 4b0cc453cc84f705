#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smdn/data_model.hpp"
#include "smdn/rejection.hpp"

namespace smdn {

/// Dense row-major matrix of feature vectors.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : cols_(cols), data_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t cols, std::vector<double> data);

  static FeatureMatrix from_records(std::span<const ExampleRecord* const> records);

  std::size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  void append_row(std::span<const double> values);

private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Reach-distance sums at or below this value are clamped before division.
inline constexpr double kReachSumFloor = 1e-12;

struct LofThresholdStats {
  double mu = 0.0;
  double sigma = 0.0;
  double alpha = 2.0;
};

/// Local Outlier Factor in novelty mode: training points are fixed, queries
/// are scored against them and never join the reference set.
class LofModel {
public:
  LofModel() = default;

  /// Precomputes k-distance and lrd for every training row. Throws
  /// PreconditionError unless rows > k >= 1.
  LofModel(FeatureMatrix train, std::size_t k);

  /// Rebuilds a model from stored per-point statistics (no refit).
  LofModel(FeatureMatrix train, std::size_t k, std::vector<double> kdist, std::vector<double> lrd,
           std::vector<char> saturated, LofThresholdStats stats);

  /// LOF of a query. Neighborhoods are tie-inclusive: every training point at
  /// distance <= the k-th neighbor distance belongs to N_k.
  double score(std::span<const double> query) const;
  std::vector<double> score_batch(const FeatureMatrix& queries) const;
  /// LOF of each training point against the others (self excluded).
  std::vector<double> in_sample_scores() const;

  /// Sets threshold = mean + alpha * std (population) of `calib_scores`.
  void set_threshold(std::span<const double> calib_scores, double alpha);

  bool fitted() const { return k_ > 0; }
  std::size_t k() const { return k_; }
  std::size_t dim() const { return train_.cols(); }
  const FeatureMatrix& train_features() const { return train_; }
  const std::vector<double>& train_kdist() const { return kdist_; }
  const std::vector<double>& train_lrd() const { return lrd_; }
  const std::vector<char>& train_saturated() const { return saturated_; }
  double threshold() const { return stats_.mu + stats_.alpha * stats_.sigma; }
  const LofThresholdStats& threshold_stats() const { return stats_; }

private:
  FeatureMatrix train_;
  std::size_t k_ = 0;
  std::vector<double> kdist_;
  std::vector<double> lrd_;
  // reach-dist sum hit the floor
  std::vector<char> saturated_;
  LofThresholdStats stats_;
};

/// Fits on `train`, then thresholds on the LOF scores of `calib`.
LofModel fit_lof(const FeatureMatrix& train, std::size_t k, double alpha, const FeatureMatrix& calib);

/// Train split for the reference set, `calib_split` for the threshold.
LofModel fit_lof(const DatasetBundle& bundle, std::size_t k, double alpha,
                 Split calib_split = Split::Val);

/// Unknown iff score > threshold; otherwise the logits' argmax class.
/// confidence_score carries threshold - score.
OpenSetPrediction predict_lof(const ExampleRecord& record, const LabelSpace& space,
                              const LofModel& model);

}  // namespace smdn
