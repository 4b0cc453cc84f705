#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdn/eval.hpp"
#include "smdn/fusion.hpp"

namespace smdn {

inline constexpr Method kAllMethods[] = {Method::SoftmaxT, Method::DocSoftmax, Method::SofterMax,
                                         Method::Lof, Method::Smdn};

/// Predicts every record of one split of `bundle` with `method`.
std::vector<OpenSetPrediction> predict_split(const DatasetBundle& bundle, const SmdnModel& model,
                                             Method method, Split split = Split::Test);

struct ExperimentOptions {
  double ratio = 0.5;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  SmdnOptions smdn;
  /// When set, run <id> reads the classifier re-exported for its manifest
  /// from <reexport_dir>/<id>/{manifest.json,records.csv}. Otherwise the
  /// logit columns of dropped classes are projected away.
  std::optional<std::filesystem::path> reexport_dir;
};

/// Run manifests for a fixed seed; run i uses seed splitmix64(seed + i).
std::vector<RunManifest> plan_runs(const DatasetBundle& bundle, double ratio, std::size_t runs,
                                   std::uint64_t seed);

struct RunResult {
  RunManifest manifest;
  double temperature = 1.0;
  std::vector<EvalReport> reports;  // one per entry of kAllMethods
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  nlohmann::json aggregate;
};

/// Restricts (or loads the re-export), fits and evaluates every method for
/// one manifest. Writes manifest.json, predictions-<method>.csv and
/// report.json into `run_dir` when it is non-empty.
RunResult execute_run(const DatasetBundle& bundle, const RunManifest& manifest,
                      const ExperimentOptions& options, const std::filesystem::path& run_dir);

/// All runs (up to options.jobs concurrently) plus aggregate.json in
/// `out_dir` (skipped when empty). Output bytes depend only on the inputs.
ExperimentResult run_experiment(const DatasetBundle& bundle, const ExperimentOptions& options,
                                const std::filesystem::path& out_dir);

}  // namespace smdn
