#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "smdn/data_model.hpp"

namespace smdn {

/// Softmax with max-subtraction. Throws ValidationError on empty or
/// non-finite input.
std::vector<double> softmax(std::span<const double> logits);

/// softmax(logits / temperature). Throws PreconditionError unless
/// temperature > 0.
std::vector<double> softermax(std::span<const double> logits, double temperature);

/// Index of the largest entry (first one on ties).
std::size_t argmax(std::span<const double> values);

/// A known-class example reduced to what calibration needs.
struct LabeledLogits {
  std::span<const double> logits;
  std::size_t label = 0;
};

/// Known-class records of a bundle split, in file order.
std::vector<LabeledLogits> labeled_logits(const DatasetBundle& bundle, Split split);

/// Mean negative log-likelihood (nats / example) of the gold labels under
/// softermax at `temperature`. Throws PreconditionError on empty input.
double nll(std::span<const LabeledLogits> examples, double temperature);

struct TemperatureSearch {
  double t_lo = 0.25;
  double t_hi = 8.0;
  /// Final bracket width in log T.
  double tol = 1e-4;
};

struct TemperatureFit {
  double temperature = 1.0;
  double final_nll = 0.0;
  /// Every (T, NLL) pair evaluated, in evaluation order.
  std::vector<std::pair<double, double>> search_trace;
  /// The minimizer sits on an edge of the search bracket.
  bool hit_bound = false;
};

/// Golden-section search for the NLL-minimizing temperature on log T.
/// The result never has a higher NLL than T = 1 when 1 lies in the bracket.
TemperatureFit fit_temperature(std::span<const LabeledLogits> val, const TemperatureSearch& search = {});

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double fraction = 0.0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
};

/// Equal-width reliability bins over the max calibrated probability.
/// Bin i covers [i/K, (i+1)/K); the last bin also takes 1.0.
ReliabilityReport ece(std::span<const LabeledLogits> examples, double temperature,
                      std::size_t n_bins = 15);

/// Same binning for precomputed (confidence, correct) pairs.
ReliabilityReport ece_from_confidences(std::span<const double> confidence,
                                       std::span<const bool> correct, std::size_t n_bins = 15);

}  // namespace smdn
