#include "smdn/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smdn/calibration.hpp"
#include "smdn/error.hpp"

namespace smdn {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::SoftmaxT: return "softmax_t";
    case Method::DocSoftmax: return "doc_softmax";
    case Method::SofterMax: return "softermax";
    case Method::Lof: return "lof";
    case Method::Smdn: return "smdn";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (auto m : {Method::SoftmaxT, Method::DocSoftmax, Method::SofterMax, Method::Lof, Method::Smdn})
    if (to_string(m) == text) return m;
  throw PreconditionError("unknown method '" + std::string(text) +
                          "' (expected softmax_t, doc_softmax, softermax, lof or smdn)");
}

double class_threshold(double mu, double sigma, double alpha) {
  return std::max(kThresholdFloor, mu - alpha * sigma);
}

std::vector<double> SofterMaxModel::thresholds() const {
  std::vector<double> out;
  out.reserve(per_class.size());
  for (const auto& c : per_class) out.push_back(c.t);
  return out;
}

SofterMaxModel fit_thresholds(std::span<const std::span<const double>> logits,
                              std::span<const std::size_t> labels,
                              const std::vector<std::string>& class_names, double temperature,
                              double alpha) {
  if (logits.size() != labels.size())
    throw PreconditionError("fit_thresholds: logits/labels length mismatch");
  if (!(alpha >= 0.0)) throw PreconditionError("alpha must be non-negative");
  const std::size_t n = class_names.size();
  std::vector<std::vector<double>> values(n);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (logits[j].size() != n) throw PreconditionError("fit_thresholds: logit dimension mismatch");
    const auto c = labels[j];
    if (c >= n) throw PreconditionError("fit_thresholds: label index out of range");
    values[c].push_back(softermax(logits[j], temperature)[c]);
  }

  SofterMaxModel model;
  model.temperature = temperature;
  model.alpha = alpha;
  for (std::size_t c = 0; c < n; ++c) {
    const auto& v = values[c];
    if (v.empty())
      throw PreconditionError("class '" + class_names[c] + "' has no records in the statistics slice");
    double mean = 0.0;
    for (double p : v) mean += p;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double p : v) var += (p - mean) * (p - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    model.per_class.push_back({class_names[c], mean, sd, class_threshold(mean, sd, alpha)});
  }
  return model;
}

SofterMaxModel fit_thresholds(const DatasetBundle& bundle, Split stat_split, double temperature,
                              double alpha) {
  std::vector<std::span<const double>> logits;
  std::vector<std::size_t> labels;
  for (const auto& r : bundle.records()) {
    if (r.split != stat_split || r.is_unknown()) continue;
    logits.emplace_back(r.logits);
    labels.push_back(bundle.gold_index(r));
  }
  auto model =
      fit_thresholds(logits, labels, bundle.label_space().class_names(), temperature, alpha);
  model.stat_split = stat_split;
  return model;
}

ConfidenceScore confidence_from_probabilities(std::span<const double> probabilities,
                                              std::span<const double> thresholds) {
  if (probabilities.size() != thresholds.size() || probabilities.empty())
    throw PreconditionError("confidence score: dimension mismatch between probabilities (" +
                            std::to_string(probabilities.size()) + ") and thresholds (" +
                            std::to_string(thresholds.size()) + ")");
  ConfidenceScore best{-std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double margin = probabilities[i] - thresholds[i];
    if (margin > best.score) best = {margin, i};
  }
  return best;
}

ConfidenceScore confidence_score(std::span<const double> logits, const SofterMaxModel& model) {
  if (logits.size() != model.per_class.size())
    throw PreconditionError("confidence score: record has " + std::to_string(logits.size()) +
                            " logits, model has " + std::to_string(model.per_class.size()) +
                            " classes");
  return confidence_from_probabilities(softermax(logits, model.temperature), model.thresholds());
}

OpenSetPrediction predict_open_set(const ExampleRecord& record, const LabelSpace& space,
                                   const SofterMaxModel* model, Method method) {
  OpenSetPrediction out;
  out.id = record.id;
  out.method = method;
  const auto& names = space.class_names();
  switch (method) {
    case Method::SoftmaxT: {
      const auto p = softmax(record.logits);
      const auto top = argmax(p);
      out.confidence_score = p[top] - 0.5;
      out.decision = p[top] <= 0.5 ? std::string(kUnknownLabel) : names[top];
      return out;
    }
    case Method::DocSoftmax:
    case Method::SofterMax: {
      if (model == nullptr)
        throw PreconditionError(std::string(to_string(method)) + " needs fitted thresholds");
      if (method == Method::DocSoftmax && model->temperature != 1.0)
        throw PreconditionError("doc_softmax thresholds must be fitted at temperature 1");
      const auto c = confidence_score(record.logits, *model);
      out.confidence_score = c.score;
      out.decision = c.score < 0.0 ? std::string(kUnknownLabel) : names[c.best_class];
      return out;
    }
    case Method::Lof:
    case Method::Smdn:
      break;
  }
  throw PreconditionError("method " + std::string(to_string(method)) +
                          " is predicted by the fusion module (predict_lof / predict_smdn)");
}

}  // namespace smdn
