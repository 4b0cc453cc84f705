#include "smdn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "smdn/error.hpp"

namespace smdn {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax of an empty vector");
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw ValidationError("softmax input is not finite");
    top = std::max(top, z);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> softermax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw PreconditionError("temperature must be a positive finite number");
  if (temperature == 1.0) return softmax(logits);
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& z : scaled) z /= temperature;
  return softmax(scaled);
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<LabeledLogits> labeled_logits(const DatasetBundle& bundle, Split split) {
  std::vector<LabeledLogits> out;
  for (const auto& r : bundle.records())
    if (r.split == split && !r.is_unknown()) out.push_back({r.logits, bundle.gold_index(r)});
  return out;
}

namespace {

// -log softmax(z / T)[label] via log-sum-exp; avoids log(0) for saturated
// probabilities.
double example_nll(std::span<const double> logits, std::size_t label, double temperature) {
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) top = std::max(top, z / temperature);
  double total = 0.0;
  for (double z : logits) total += std::exp(z / temperature - top);
  return top + std::log(total) - logits[label] / temperature;
}

}  // namespace

double nll(std::span<const LabeledLogits> examples, double temperature) {
  if (examples.empty()) throw PreconditionError("nll of an empty slice");
  if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
  double sum = 0.0;
  for (const auto& ex : examples) {
    if (ex.label >= ex.logits.size()) throw PreconditionError("label index out of range");
    sum += example_nll(ex.logits, ex.label, temperature);
  }
  return sum / static_cast<double>(examples.size());
}

TemperatureFit fit_temperature(std::span<const LabeledLogits> val, const TemperatureSearch& search) {
  if (val.empty()) throw PreconditionError("temperature fit needs a non-empty validation slice");
  if (!(search.t_lo > 0.0) || !(search.t_lo < search.t_hi))
    throw PreconditionError("temperature bracket must satisfy 0 < t_lo < t_hi");
  if (!(search.tol > 0.0)) throw PreconditionError("temperature tolerance must be positive");

  TemperatureFit fit;
  auto eval = [&](double log_t) {
    const double t = std::exp(log_t);
    const double v = nll(val, t);
    fit.search_trace.emplace_back(t, v);
    return v;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo_bound = std::log(search.t_lo);
  const double hi_bound = std::log(search.t_hi);
  double a = lo_bound;
  double b = hi_bound;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > search.tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }

  double best_log_t = 0.5 * (a + b);
  double best = eval(best_log_t);
  // Guard against non-unimodal curves: the bracket ends and T = 1 compete.
  std::vector<double> candidates = {lo_bound, hi_bound};
  if (lo_bound <= 0.0 && 0.0 <= hi_bound) candidates.push_back(0.0);
  for (double x : candidates) {
    const double v = eval(x);
    if (v < best) {
      best = v;
      best_log_t = x;
    }
  }

  fit.temperature = std::exp(best_log_t);
  fit.final_nll = best;
  fit.hit_bound = best_log_t - lo_bound <= search.tol || hi_bound - best_log_t <= search.tol;
  return fit;
}

namespace {

std::size_t bin_index(double confidence, std::size_t n_bins) {
  const double k = static_cast<double>(n_bins);
  auto idx = static_cast<std::size_t>(std::clamp(std::floor(confidence * k), 0.0, k - 1.0));
  // Snap to exact edges i/K so boundary values always land in the upper bin.
  if (idx + 1 < n_bins && confidence >= static_cast<double>(idx + 1) / k) ++idx;
  if (idx > 0 && confidence < static_cast<double>(idx) / k) --idx;
  return idx;
}

}  // namespace

ReliabilityReport ece_from_confidences(std::span<const double> confidence,
                                       std::span<const bool> correct, std::size_t n_bins) {
  if (confidence.empty()) throw PreconditionError("ece of an empty batch");
  if (confidence.size() != correct.size())
    throw PreconditionError("ece: confidence/correct length mismatch");
  if (n_bins < 1) throw PreconditionError("ece needs at least one bin");

  ReliabilityReport report;
  report.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<std::size_t> hits(n_bins, 0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const auto b = bin_index(confidence[i], n_bins);
    ++report.bins[b].count;
    conf_sum[b] += confidence[i];
    if (correct[i]) ++hits[b];
  }
  const double total = static_cast<double>(confidence.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = report.bins[b];
    bin.lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    if (bin.count == 0) continue;
    const double n = static_cast<double>(bin.count);
    bin.fraction = n / total;
    bin.accuracy = static_cast<double>(hits[b]) / n;
    bin.mean_confidence = conf_sum[b] / n;
    report.ece += bin.fraction * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return report;
}

ReliabilityReport ece(std::span<const LabeledLogits> examples, double temperature,
                      std::size_t n_bins) {
  if (examples.empty()) throw PreconditionError("ece of an empty batch");
  std::vector<double> conf(examples.size());
  // vector<bool> has no contiguous storage to span over
  auto hit = std::make_unique<bool[]>(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto p = softermax(examples[i].logits, temperature);
    const auto top = argmax(p);
    conf[i] = p[top];
    hit[i] = top == examples[i].label;
  }
  return ece_from_confidences(conf, std::span<const bool>(hit.get(), examples.size()), n_bins);
}

}  // namespace smdn
