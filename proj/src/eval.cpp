#include "smdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "smdn/error.hpp"
#include "smdn/random.hpp"

namespace smdn {

ConfusionMatrix::ConfusionMatrix(std::size_t n, std::vector<std::uint64_t> counts)
    : n_(n), counts_(std::move(counts)) {
  if (counts_.size() != n_ * n_) throw PreconditionError("confusion matrix must be square");
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += (*this)(gold, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, pred);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double ConfusionMatrix::precision(std::size_t c) const {
  const auto denom = col_sum(c);
  return denom == 0 ? 0.0 : static_cast<double>((*this)(c, c)) / static_cast<double>(denom);
}

double ConfusionMatrix::recall(std::size_t c) const {
  const auto denom = row_sum(c);
  return denom == 0 ? 0.0 : static_cast<double>((*this)(c, c)) / static_cast<double>(denom);
}

double ConfusionMatrix::f1(std::size_t c) const {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MacroScores macro_scores(const ConfusionMatrix& confusion, std::span<const std::size_t> class_subset) {
  MacroScores out;
  if (class_subset.empty()) return out;
  for (auto c : class_subset) {
    if (c >= confusion.size()) throw PreconditionError("class index outside the confusion matrix");
    out.precision += confusion.precision(c);
    out.recall += confusion.recall(c);
  }
  const auto n = static_cast<double>(class_subset.size());
  out.precision /= n;
  out.recall /= n;
  const double denom = out.precision + out.recall;
  out.f1 = denom == 0.0 ? 0.0 : 2.0 * out.recall * out.precision / denom;
  return out;
}

double macro_f1(const ConfusionMatrix& confusion, std::span<const std::size_t> class_subset) {
  return macro_scores(confusion, class_subset).f1;
}

EvalReport report_from_confusion(std::vector<std::string> labels, ConfusionMatrix confusion) {
  if (labels.size() != confusion.size() || labels.size() < 2)
    throw PreconditionError("report needs one label per confusion row, unknown last");
  EvalReport report;
  report.labels = std::move(labels);
  report.confusion = std::move(confusion);
  const std::size_t n_all = report.confusion.size();
  std::vector<std::size_t> all(n_all);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<std::size_t> known(all.begin(), all.end() - 1);
  const std::vector<std::size_t> unknown{n_all - 1};
  report.macro_f1_all = macro_f1(report.confusion, all);
  report.macro_f1_known = macro_f1(report.confusion, known);
  report.f1_unknown = macro_f1(report.confusion, unknown);
  for (std::size_t c = 0; c < n_all; ++c)
    report.per_class.push_back({report.labels[c], report.confusion.precision(c),
                                report.confusion.recall(c), report.confusion.f1(c),
                                report.confusion.row_sum(c)});
  return report;
}

EvalReport evaluate(std::span<const OpenSetPrediction> predictions, const DatasetBundle& gold) {
  const auto& space = gold.label_space();
  const std::size_t n = space.n_classes();
  auto index_of = [&](const std::string& label) -> std::size_t {
    if (label == kUnknownLabel) return n;
    const int i = space.index_of(label);
    if (i < 0) throw ValidationError("prediction label '" + label + "' is not in the label space");
    return static_cast<std::size_t>(i);
  };

  std::unordered_map<std::string_view, const OpenSetPrediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second)
      throw ValidationError("duplicate prediction id '" + p.id + "'");

  ConfusionMatrix confusion(n + 1);
  std::size_t matched = 0;
  for (const auto* r : gold.split(Split::Test)) {
    const auto it = by_id.find(r->id);
    if (it == by_id.end()) throw ValidationError("no prediction for test id '" + r->id + "'");
    ++confusion(index_of(r->gold_label), index_of(it->second->decision));
    ++matched;
  }
  if (matched != by_id.size())
    throw ValidationError(std::to_string(by_id.size() - matched) +
                          " prediction id(s) do not belong to the test split");

  std::vector<std::string> labels = space.class_names();
  labels.emplace_back(kUnknownLabel);
  return report_from_confusion(std::move(labels), std::move(confusion));
}

std::size_t known_class_count(std::size_t n_classes, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw PreconditionError("known-class ratio must lie strictly between 0 and 1");
  const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_classes)));
  if (m == 0 || m >= n_classes)
    throw PreconditionError("known-class ratio " + std::to_string(ratio) + " selects " +
                            std::to_string(m) + " of " + std::to_string(n_classes) +
                            " classes; need at least 1 and fewer than all");
  return m;
}

RunManifest sample_known_classes(const LabelSpace& space, std::span<const std::size_t> train_counts,
                                 double ratio, std::uint64_t seed, std::string run_id) {
  const std::size_t n = space.n_classes();
  if (train_counts.size() != n)
    throw PreconditionError("sample_known_classes: one train count per class required");
  for (auto c : train_counts)
    if (c == 0) throw PreconditionError("sample_known_classes: class counts must be positive");
  const std::size_t m = known_class_count(n, ratio);

  // log(u^(1/w)) = log(u)/w keeps the keys away from underflow.
  Rng rng(seed);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    keys.emplace_back(std::log(rng.uniform()) / static_cast<double>(train_counts[i]), i);
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m), keys.end(),
                    [](const auto& x, const auto& y) {
                      return x.first != y.first ? x.first > y.first : x.second < y.second;
                    });
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < m; ++i) chosen.push_back(keys[i].second);
  std::sort(chosen.begin(), chosen.end());

  RunManifest manifest;
  manifest.run_id = std::move(run_id);
  manifest.seed = seed;
  manifest.known_ratio = ratio;
  for (auto i : chosen) manifest.known_classes.push_back(space.class_names()[i]);
  return manifest;
}

DatasetBundle restrict_bundle(const DatasetBundle& bundle, const RunManifest& manifest,
                              LogitPolicy policy) {
  const auto& space = bundle.label_space();
  if (bundle.requires_reexport())
    throw PreconditionError("bundle is already restricted and awaits re-export");
  if (manifest.known_classes.empty() || manifest.known_classes.size() >= space.n_classes())
    throw PreconditionError("run manifest must select a non-empty strict subset of the classes");

  std::vector<std::size_t> keep;
  for (const auto& name : manifest.known_classes) {
    const int i = space.index_of(name);
    if (i < 0) throw PreconditionError("run manifest class '" + name + "' is not in the bundle");
    keep.push_back(static_cast<std::size_t>(i));
  }
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw PreconditionError("run manifest lists a class twice");
  std::vector<char> selected(space.n_classes(), 0);
  for (auto i : keep) selected[i] = 1;

  std::vector<ExampleRecord> records;
  for (const auto& r : bundle.records()) {
    const bool known = !r.is_unknown() && selected[bundle.gold_index(r)];
    if (!known && r.split != Split::Test) continue;
    ExampleRecord out = r;
    if (!known) out.gold_label = std::string(kUnknownLabel);
    if (policy == LogitPolicy::Project) {
      out.logits.clear();
      for (auto i : keep) out.logits.push_back(r.logits[i]);
    }
    records.push_back(std::move(out));
  }

  if (policy == LogitPolicy::MarkReexport)
    return DatasetBundle(space, std::move(records), /*requires_reexport=*/true);
  std::vector<std::string> names;
  for (auto i : keep) names.push_back(space.class_names()[i]);
  return DatasetBundle(LabelSpace(std::move(names), space.feature_dim()), std::move(records));
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate out;
  out.per_run.assign(values.begin(), values.end());
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  double se = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  out.ci_low = out.mean - 1.96 * se;
  out.ci_high = out.mean + 1.96 * se;
  return out;
}

}  // namespace smdn
