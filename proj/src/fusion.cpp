#include "smdn/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "smdn/error.hpp"

namespace smdn {

std::string_view to_string(PlattSource source) {
  return source == PlattSource::SofterMax ? "softermax" : "lof";
}

std::string_view to_string(FusionRule rule) {
  switch (rule) {
    case FusionRule::Mean: return "mean";
    case FusionRule::Max: return "max";
    case FusionRule::Either: return "either";
  }
  return "?";
}

PlattSource parse_platt_source(std::string_view text) {
  if (text == "softermax") return PlattSource::SofterMax;
  if (text == "lof") return PlattSource::Lof;
  throw PreconditionError("unknown Platt source '" + std::string(text) + "'");
}

FusionRule parse_fusion_rule(std::string_view text) {
  if (text == "mean") return FusionRule::Mean;
  if (text == "max") return FusionRule::Max;
  if (text == "either") return FusionRule::Either;
  throw PreconditionError("unknown fusion rule '" + std::string(text) +
                          "' (expected mean, max or either)");
}

double PlattScaler::shift(double raw_score) const {
  return source == PlattSource::SofterMax ? boundary - raw_score : raw_score - boundary;
}

double PlattScaler::probability(double raw_score) const {
  return 1.0 / (1.0 + std::exp(a * shift(raw_score) + b));
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Targets {
  double novel = 0.0;
  double known = 0.0;
};

Targets platt_targets(std::span<const double> shifted) {
  const auto n_pos = static_cast<double>(
      std::count_if(shifted.begin(), shifted.end(), [](double s) { return s > 0.0; }));
  const double n_neg = static_cast<double>(shifted.size()) - n_pos;
  return {(n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)};
}

double population_sd(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

double platt_objective(std::span<const double> shifted, double a) {
  const auto tg = platt_targets(shifted);
  double total = 0.0;
  for (double s : shifted) {
    const double t = s > 0.0 ? tg.novel : tg.known;
    // -[t log p + (1-t) log(1-p)] with p = 1 / (1 + exp(a s))
    total += t * softplus(a * s) + (1.0 - t) * softplus(-a * s);
  }
  return total;
}

PlattScaler fit_platt(std::span<const double> scores, double boundary, PlattSource source) {
  if (scores.empty()) throw PreconditionError("Platt scaling needs at least one score");
  PlattScaler scaler;
  scaler.boundary = boundary;
  scaler.source = source;

  std::vector<double> shifted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) shifted[i] = scaler.shift(scores[i]);

  const double sd = population_sd(shifted);
  const double fallback = sd > 0.0 ? -1.0 / sd : -1.0;
  const bool any_novel = std::any_of(shifted.begin(), shifted.end(), [](double s) { return s > 0.0; });
  scaler.a = fallback;
  if (!any_novel) return scaler;

  // The objective is convex in a; damped Newton from the fallback slope.
  const auto tg = platt_targets(shifted);
  double a = fallback;
  double f = platt_objective(shifted, a);
  for (int iter = 0; iter < 200; ++iter) {
    double g = 0.0;
    double h = 0.0;
    for (double s : shifted) {
      const double t = s > 0.0 ? tg.novel : tg.known;
      const double p = 1.0 / (1.0 + std::exp(a * s));
      g += s * (t - p);
      h += s * s * p * (1.0 - p);
    }
    if (!(h > 0.0)) break;
    double step = g / h;
    double next = a - step;
    double f_next = platt_objective(shifted, next);
    while (f_next > f && std::abs(step) > 1e-300) {
      step *= 0.5;
      next = a - step;
      f_next = platt_objective(shifted, next);
    }
    const bool converged = std::abs(next - a) <= 1e-13 * (1.0 + std::abs(a));
    if (f_next <= f) {
      a = next;
      f = f_next;
    }
    if (converged) break;
  }
  scaler.a = a;
  return scaler;
}

double fuse(double p_sm, double p_lof, FusionRule rule) {
  switch (rule) {
    case FusionRule::Mean: return 0.5 * (p_sm + p_lof);
    case FusionRule::Max:
    case FusionRule::Either: return std::max(p_sm, p_lof);
  }
  return 0.0;
}

bool fused_rejects(double p_sm, double p_lof, FusionRule rule) {
  if (rule == FusionRule::Either) return p_sm > 0.5 || p_lof > 0.5;
  return fuse(p_sm, p_lof, rule) > 0.5;
}

namespace {

void require_fitted(const SmdnModel& model) {
  if (model.softermax.per_class.empty() || !model.lof.fitted())
    throw PreconditionError("SMDN model is not fitted");
}

}  // namespace

NoveltyProbabilities novelty_probability(const ExampleRecord& record, const SmdnModel& model) {
  require_fitted(model);
  const auto conf = confidence_score(record.logits, model.softermax);
  const double lof = model.lof.score(record.features);
  NoveltyProbabilities out;
  out.p_sm = model.platt_sm.probability(conf.score);
  out.p_lof = model.platt_lof.probability(lof);
  out.p_joint = fuse(out.p_sm, out.p_lof, model.fusion_rule);
  return out;
}

OpenSetPrediction predict_smdn(const ExampleRecord& record, const LabelSpace& space,
                               const SmdnModel& model) {
  const auto p = novelty_probability(record, model);
  OpenSetPrediction out;
  out.id = record.id;
  out.method = Method::Smdn;
  out.p_sm = p.p_sm;
  out.p_lof = p.p_lof;
  out.p_joint = p.p_joint;
  out.confidence_score = model.joint_threshold - p.p_joint;
  const bool reject = fused_rejects(p.p_sm, p.p_lof, model.fusion_rule);
  out.decision = reject ? std::string(kUnknownLabel)
                        : space.class_names()[argmax(softermax(record.logits, model.softermax.temperature))];
  return out;
}

SmdnModel fit_smdn(const DatasetBundle& bundle, const SmdnOptions& options) {
  if (bundle.requires_reexport())
    throw PreconditionError(
        "bundle was restricted without re-exporting the classifier; its logits still span the "
        "full label space");
  SmdnModel model;
  model.fusion_rule = options.fusion_rule;

  const auto val = labeled_logits(bundle, Split::Val);
  model.calibration = fit_temperature(val, options.search);
  const double t = model.calibration.temperature;
  model.softermax = fit_thresholds(bundle, options.stat_split, t, options.alpha);
  model.doc_softmax = fit_thresholds(bundle, options.stat_split, 1.0, options.alpha);
  model.lof = fit_lof(bundle, options.k, options.alpha, Split::Val);

  const auto val_records = bundle.split(Split::Val);
  std::vector<double> conf;
  conf.reserve(val_records.size());
  for (const auto* r : val_records) conf.push_back(confidence_score(r->logits, model.softermax).score);
  model.platt_sm = fit_platt(conf, 0.0, PlattSource::SofterMax);

  const auto lof_scores = model.lof.score_batch(FeatureMatrix::from_records(val_records));
  model.platt_lof = fit_platt(lof_scores, model.lof.threshold(), PlattSource::Lof);
  return model;
}

OpenSetPrediction predict(const ExampleRecord& record, const LabelSpace& space,
                          const SmdnModel& model, Method method) {
  switch (method) {
    case Method::SoftmaxT: return predict_open_set(record, space, nullptr, method);
    case Method::DocSoftmax: return predict_open_set(record, space, &model.doc_softmax, method);
    case Method::SofterMax: return predict_open_set(record, space, &model.softermax, method);
    case Method::Lof: return predict_lof(record, space, model.lof);
    case Method::Smdn: return predict_smdn(record, space, model);
  }
  throw PreconditionError("unknown method");
}

}  // namespace smdn
