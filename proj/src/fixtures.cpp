#include "smdn/fixtures.hpp"

#include <cstdio>

#include "smdn/error.hpp"
#include "smdn/random.hpp"

namespace smdn::fixtures {

std::vector<std::string> preset_names() { return {"gaussian-3+1", "gaussian-6+2", "gaussian-8"}; }

GaussianSpec preset(std::string_view name) {
  GaussianSpec s;
  if (name == "gaussian-3+1") {
    s.gain = 4.5;
    return s;
  }
  if (name == "gaussian-6+2") {
    s.n_known = 6;
    s.n_unknown = 2;
    s.feature_dim = 12;
    s.gain = 4.5;
    s.train_per_class = {150};
    s.val_per_class = 50;
    s.test_per_class = 50;
    return s;
  }
  if (name == "gaussian-8") {
    // All classes known at export time; the known-class protocol decides
    // which ones become unknown. Imbalanced, like ATIS / SwDA.
    s.n_known = 8;
    s.n_unknown = 0;
    s.feature_dim = 12;
    s.gain = 4.5;
    s.train_per_class = {400, 300, 220, 160, 120, 90, 70, 50};
    s.val_per_class = 40;
    s.test_per_class = 40;
    return s;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw PreconditionError("unknown fixture preset '" + std::string(name) + "' (available: " + known + ")");
}

DatasetBundle generate(const GaussianSpec& spec, std::uint64_t seed) {
  if (spec.n_known < 2) throw PreconditionError("fixture needs at least 2 known classes");
  if (spec.feature_dim < spec.n_known + spec.n_unknown)
    throw PreconditionError("fixture feature_dim must give every class its own axis");
  if (spec.train_per_class.empty()) throw PreconditionError("fixture needs train counts");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.n_known; ++c) names.push_back("class_" + std::to_string(c));
  LabelSpace space(names, spec.feature_dim);

  Rng rng(seed);
  std::vector<ExampleRecord> records;
  std::size_t next_id = 0;
  auto emit = [&](Split split, std::size_t axis, double offset, const std::string& label) {
    ExampleRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "ex%06zu", next_id++);
    r.id = id;
    r.split = split;
    r.gold_label = label;
    r.features.resize(spec.feature_dim);
    for (std::size_t d = 0; d < spec.feature_dim; ++d)
      r.features[d] = (d == axis ? offset : 0.0) + spec.noise * rng.normal();
    r.logits.resize(spec.n_known);
    for (std::size_t c = 0; c < spec.n_known; ++c)
      r.logits[c] = spec.gain * (r.features[c] - 0.5 * spec.separation);
    records.push_back(std::move(r));
  };

  for (std::size_t c = 0; c < spec.n_known; ++c)
    for (std::size_t i = 0; i < spec.train_per_class[c % spec.train_per_class.size()]; ++i)
      emit(Split::Train, c, spec.separation, names[c]);
  for (std::size_t c = 0; c < spec.n_known; ++c)
    for (std::size_t i = 0; i < spec.val_per_class; ++i) emit(Split::Val, c, spec.separation, names[c]);
  for (std::size_t c = 0; c < spec.n_known; ++c)
    for (std::size_t i = 0; i < spec.test_per_class; ++i) emit(Split::Test, c, spec.separation, names[c]);
  for (std::size_t u = 0; u < spec.n_unknown; ++u)
    for (std::size_t i = 0; i < spec.test_per_class; ++i)
      emit(Split::Test, spec.n_known + u, spec.unknown_offset, std::string(kUnknownLabel));

  return DatasetBundle(std::move(space), std::move(records));
}

DatasetBundle generate(std::string_view preset_name, std::uint64_t seed) {
  return generate(preset(preset_name), seed);
}

}  // namespace smdn::fixtures
