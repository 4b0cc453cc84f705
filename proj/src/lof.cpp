#include "smdn/lof.hpp"

#include <algorithm>
#include <cmath>

#include "smdn/calibration.hpp"
#include "smdn/error.hpp"
#include "smdn/parallel.hpp"

namespace smdn {

FeatureMatrix::FeatureMatrix(std::size_t cols, std::vector<double> data)
    : cols_(cols), data_(std::move(data)) {
  if (cols_ == 0 || data_.size() % cols_ != 0)
    throw PreconditionError("feature matrix data is not a whole number of rows");
}

FeatureMatrix FeatureMatrix::from_records(std::span<const ExampleRecord* const> records) {
  FeatureMatrix m;
  for (const auto* r : records) m.append_row(r->features);
  return m;
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (cols_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) throw PreconditionError("feature row has the wrong dimension");
  data_.insert(data_.end(), values.begin(), values.end());
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

struct Neighborhood {
  double kdist = 0.0;
  std::vector<std::size_t> members;
  std::vector<double> dist;
};

// Tie-inclusive k-neighborhood of `query` among the rows of `train`, skipping
// row `self` (pass train.rows() to skip nothing).
Neighborhood neighborhood(const FeatureMatrix& train, std::span<const double> query, std::size_t k,
                          std::size_t self) {
  const std::size_t m = train.rows();
  std::vector<double> dist(m);
  for (std::size_t j = 0; j < m; ++j) dist[j] = euclidean_distance(query, train.row(j));

  std::vector<double> pool;
  pool.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    if (j != self) pool.push_back(dist[j]);
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1), pool.end());

  Neighborhood nb;
  nb.kdist = pool[k - 1];
  for (std::size_t j = 0; j < m; ++j) {
    if (j == self || dist[j] > nb.kdist) continue;
    nb.members.push_back(j);
    nb.dist.push_back(dist[j]);
  }
  return nb;
}

struct Density {
  double lrd = 0.0;
  bool saturated = false;
};

Density reach_density(const Neighborhood& nb, std::span<const double> train_kdist) {
  double sum = 0.0;
  for (std::size_t i = 0; i < nb.members.size(); ++i)
    sum += std::max(train_kdist[nb.members[i]], nb.dist[i]);
  const bool saturated = sum <= kReachSumFloor;
  return {static_cast<double>(nb.members.size()) / std::max(sum, kReachSumFloor), saturated};
}

}  // namespace

LofModel::LofModel(FeatureMatrix train, std::size_t k) : train_(std::move(train)), k_(k) {
  const std::size_t m = train_.rows();
  if (k_ < 1) throw PreconditionError("LOF needs k >= 1");
  if (m <= k_)
    throw PreconditionError("LOF needs more than k = " + std::to_string(k_) +
                            " training points, got " + std::to_string(m));

  std::vector<Neighborhood> hoods(m);
  kdist_.resize(m);
  parallel_for(m, [&](std::size_t i) {
    hoods[i] = neighborhood(train_, train_.row(i), k_, i);
    kdist_[i] = hoods[i].kdist;
  });
  lrd_.resize(m);
  saturated_.resize(m);
  parallel_for(m, [&](std::size_t i) {
    const auto d = reach_density(hoods[i], kdist_);
    lrd_[i] = d.lrd;
    saturated_[i] = d.saturated;
  });
}

LofModel::LofModel(FeatureMatrix train, std::size_t k, std::vector<double> kdist,
                   std::vector<double> lrd, std::vector<char> saturated, LofThresholdStats stats)
    : train_(std::move(train)),
      k_(k),
      kdist_(std::move(kdist)),
      lrd_(std::move(lrd)),
      saturated_(std::move(saturated)),
      stats_(stats) {
  const std::size_t m = train_.rows();
  if (k_ < 1 || m <= k_) throw PreconditionError("stored LOF model violates k < M");
  if (kdist_.size() != m || lrd_.size() != m || saturated_.size() != m)
    throw PreconditionError("stored LOF statistics do not match the training matrix");
  for (double v : lrd_)
    if (!(v > 0.0) || !std::isfinite(v))
      throw PreconditionError("stored LOF lrd must be positive and finite");
}

double LofModel::score(std::span<const double> query) const {
  if (!fitted()) throw PreconditionError("LOF model is not fitted");
  if (query.size() != train_.cols())
    throw PreconditionError("LOF query has dimension " + std::to_string(query.size()) +
                            ", model expects " + std::to_string(train_.cols()));
  const auto nb = neighborhood(train_, query, k_, train_.rows());
  const auto own = reach_density(nb, kdist_);
  double total = 0.0;
  for (auto j : nb.members) {
    if (own.saturated && saturated_[j])
      total += 1.0;
    else
      total += lrd_[j] / own.lrd;
  }
  return total / static_cast<double>(nb.members.size());
}

std::vector<double> LofModel::score_batch(const FeatureMatrix& queries) const {
  std::vector<double> out(queries.rows());
  parallel_for(queries.rows(), [&](std::size_t i) { out[i] = score(queries.row(i)); });
  return out;
}

std::vector<double> LofModel::in_sample_scores() const {
  if (!fitted()) throw PreconditionError("LOF model is not fitted");
  std::vector<double> out(train_.rows());
  parallel_for(train_.rows(), [&](std::size_t i) {
    const auto nb = neighborhood(train_, train_.row(i), k_, i);
    double total = 0.0;
    for (auto j : nb.members)
      total += saturated_[i] && saturated_[j] ? 1.0 : lrd_[j] / lrd_[i];
    out[i] = total / static_cast<double>(nb.members.size());
  });
  return out;
}

void LofModel::set_threshold(std::span<const double> calib_scores, double alpha) {
  if (calib_scores.empty()) throw PreconditionError("LOF threshold needs a non-empty calibration slice");
  if (!(alpha >= 0.0)) throw PreconditionError("alpha must be non-negative");
  double mean = 0.0;
  for (double s : calib_scores) mean += s;
  mean /= static_cast<double>(calib_scores.size());
  double var = 0.0;
  for (double s : calib_scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(calib_scores.size());
  stats_ = {mean, std::sqrt(var), alpha};
}

LofModel fit_lof(const FeatureMatrix& train, std::size_t k, double alpha, const FeatureMatrix& calib) {
  if (calib.rows() == 0) throw PreconditionError("LOF threshold needs a non-empty calibration slice");
  if (calib.cols() != train.cols())
    throw PreconditionError("LOF calibration features have the wrong dimension");
  LofModel model(train, k);
  model.set_threshold(model.score_batch(calib), alpha);
  return model;
}

LofModel fit_lof(const DatasetBundle& bundle, std::size_t k, double alpha, Split calib_split) {
  const auto train = bundle.split(Split::Train);
  const auto calib = bundle.split(calib_split);
  return fit_lof(FeatureMatrix::from_records(train), k, alpha, FeatureMatrix::from_records(calib));
}

OpenSetPrediction predict_lof(const ExampleRecord& record, const LabelSpace& space,
                              const LofModel& model) {
  OpenSetPrediction out;
  out.id = record.id;
  out.method = Method::Lof;
  const double s = model.score(record.features);
  const double threshold = model.threshold();
  out.confidence_score = threshold - s;
  out.decision = s > threshold ? std::string(kUnknownLabel)
                               : space.class_names()[argmax(record.logits)];
  return out;
}

}  // namespace smdn
