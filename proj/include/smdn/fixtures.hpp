#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smdn/data_model.hpp"

namespace smdn::fixtures {

/// Synthetic classifier exports: isotropic Gaussian clusters in feature
/// space, one axis per class, and logits that are a fixed linear map of the
/// features. Held-out classes appear only in the test split, labelled
/// unknown, and sit off every known axis, so their logits look ambiguous
/// while their features are far from every known cluster.
struct GaussianSpec {
  std::size_t n_known = 3;
  std::size_t n_unknown = 1;
  std::size_t feature_dim = 8;
  /// Known cluster mean = separation * e_c.
  double separation = 3.0;
  /// Unknown cluster mean = unknown_offset * e_{n_known + u}.
  double unknown_offset = 6.0;
  double noise = 1.0;
  /// Logit slope; large values make the classifier over-confident.
  double gain = 3.0;
  /// Per-class train counts (cycled if shorter than n_known).
  std::vector<std::size_t> train_per_class = {200};
  std::size_t val_per_class = 60;
  std::size_t test_per_class = 60;
};

/// Named presets: "gaussian-3+1", "gaussian-6+2", "gaussian-8".
std::vector<std::string> preset_names();
GaussianSpec preset(std::string_view name);

DatasetBundle generate(const GaussianSpec& spec, std::uint64_t seed);
DatasetBundle generate(std::string_view preset_name, std::uint64_t seed);

}  // namespace smdn::fixtures
