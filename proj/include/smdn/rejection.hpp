#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smdn/data_model.hpp"

namespace smdn {

enum class Method { SoftmaxT, DocSoftmax, SofterMax, Lof, Smdn };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct ClassThreshold {
  std::string label;
  double mu = 0.0;
  double sigma = 0.0;
  double t = 0.5;
};

/// Probability floor shared by every per-class threshold.
inline constexpr double kThresholdFloor = 0.5;

/// max(0.5, mu - alpha * sigma)
double class_threshold(double mu, double sigma, double alpha);

/// Temperature plus per-class probability thresholds fitted on calibrated
/// outputs. With temperature 1 this is the DOC (Softmax) baseline.
struct SofterMaxModel {
  double temperature = 1.0;
  double alpha = 2.0;
  Split stat_split = Split::Train;
  std::vector<ClassThreshold> per_class;

  std::vector<double> thresholds() const;
};

/// Statistics use every record whose gold label is class i (population
/// standard deviation). Throws PreconditionError when a class has no record.
SofterMaxModel fit_thresholds(const DatasetBundle& bundle, Split stat_split, double temperature,
                              double alpha = 2.0);

/// Same, from an explicit (logits, label) slice over `class_names`.
SofterMaxModel fit_thresholds(std::span<const std::span<const double>> logits,
                              std::span<const std::size_t> labels,
                              const std::vector<std::string>& class_names, double temperature,
                              double alpha = 2.0);

struct ConfidenceScore {
  double score = 0.0;
  std::size_t best_class = 0;
};

/// max_i (p_i - t_i) over probabilities `p` already on the model's temperature.
ConfidenceScore confidence_from_probabilities(std::span<const double> probabilities,
                                              std::span<const double> thresholds);

/// max_i (softermax(z, T)_i - t_i) and its argmax. Negative means reject.
ConfidenceScore confidence_score(std::span<const double> logits, const SofterMaxModel& model);

struct OpenSetPrediction {
  std::string id;
  /// A known class name or kUnknownLabel.
  std::string decision;
  /// Method-specific margin to the rejection boundary; negative values are
  /// on the reject side. For softermax / doc_softmax this is the SofterMax
  /// confidence score.
  double confidence_score = 0.0;
  Method method = Method::SofterMax;
  /// Novelty probabilities; set for smdn only.
  std::optional<double> p_sm;
  std::optional<double> p_lof;
  std::optional<double> p_joint;
};

/// Baseline and SofterMax rules. `model` is unused for softmax_t, must have
/// temperature 1 for doc_softmax, and is used as fitted for softermax.
/// lof and smdn are rejected with PreconditionError; use predict_lof /
/// predict_smdn.
OpenSetPrediction predict_open_set(const ExampleRecord& record, const LabelSpace& space,
                                   const SofterMaxModel* model, Method method);

}  // namespace smdn
