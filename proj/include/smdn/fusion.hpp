#pragma once

#include <span>
#include <string_view>

#include "smdn/calibration.hpp"
#include "smdn/lof.hpp"
#include "smdn/rejection.hpp"

namespace smdn {

enum class PlattSource { SofterMax, Lof };
enum class FusionRule { Mean, Max, Either };

std::string_view to_string(PlattSource source);
std::string_view to_string(FusionRule rule);
PlattSource parse_platt_source(std::string_view text);
FusionRule parse_fusion_rule(std::string_view text);

/// Logistic map from a sub-method score to a novelty probability.
///
/// The raw score is first shifted so that the sub-method's decision boundary
/// sits at 0 and larger values are more novel (SofterMax confidence is
/// negated, LOF keeps its orientation). The probability is then
/// 1 / (1 + exp(a*s + b)) with b = 0, so the boundary maps to exactly 0.5 and
/// a < 0 makes the map increasing in s.
struct PlattScaler {
  double a = -1.0;
  double b = 0.0;
  double boundary = 0.0;
  PlattSource source = PlattSource::SofterMax;

  double shift(double raw_score) const;
  double probability(double raw_score) const;
};

/// Fits the slope on the shifted scores. Points with shifted score > 0 are
/// pseudo-labelled novel and Platt's smoothed targets are used. With no novel
/// points the slope falls back to -1 / std(shifted scores).
PlattScaler fit_platt(std::span<const double> scores, double boundary, PlattSource source);

/// Negative log-likelihood of slope `a` under the smoothed Platt targets;
/// exposed for diagnostics and tests.
double platt_objective(std::span<const double> shifted_scores, double a);

struct SmdnModel {
  TemperatureFit calibration;
  SofterMaxModel softermax;
  /// Thresholds at T = 1 for the doc_softmax baseline.
  SofterMaxModel doc_softmax;
  LofModel lof;
  PlattScaler platt_sm{.source = PlattSource::SofterMax};
  PlattScaler platt_lof{.source = PlattSource::Lof};
  FusionRule fusion_rule = FusionRule::Mean;
  double joint_threshold = 0.5;
};

struct NoveltyProbabilities {
  double p_sm = 0.0;
  double p_lof = 0.0;
  double p_joint = 0.0;
};

double fuse(double p_sm, double p_lof, FusionRule rule);
/// Rejection decision for fused probabilities at the 0.5 joint threshold.
bool fused_rejects(double p_sm, double p_lof, FusionRule rule);

NoveltyProbabilities novelty_probability(const ExampleRecord& record, const SmdnModel& model);

/// Unknown iff the fused novelty probability exceeds 0.5; otherwise the
/// argmax class under the calibrated probabilities. confidence_score carries
/// 0.5 - p_joint.
OpenSetPrediction predict_smdn(const ExampleRecord& record, const LabelSpace& space,
                               const SmdnModel& model);

struct SmdnOptions {
  TemperatureSearch search;
  double alpha = 2.0;
  std::size_t k = 20;
  Split stat_split = Split::Train;
  FusionRule fusion_rule = FusionRule::Mean;
  std::size_t n_bins = 15;
};

/// Full pipeline: temperature on val, thresholds on `stat_split`, LOF on
/// train with its threshold on val, then both Platt scalers on val.
SmdnModel fit_smdn(const DatasetBundle& bundle, const SmdnOptions& options = {});

/// Dispatches to the rule for `method`.
OpenSetPrediction predict(const ExampleRecord& record, const LabelSpace& space,
                          const SmdnModel& model, Method method);

}  // namespace smdn
