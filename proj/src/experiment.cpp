#include "smdn/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "smdn/error.hpp"
#include "smdn/io.hpp"
#include "smdn/random.hpp"

namespace smdn {

namespace fs = std::filesystem;

std::vector<OpenSetPrediction> predict_split(const DatasetBundle& bundle, const SmdnModel& model,
                                             Method method, Split split) {
  std::vector<OpenSetPrediction> out;
  for (const auto* r : bundle.split(split)) out.push_back(predict(*r, bundle.label_space(), model, method));
  return out;
}

std::vector<RunManifest> plan_runs(const DatasetBundle& bundle, double ratio, std::size_t runs,
                                   std::uint64_t seed) {
  const auto counts = bundle.class_counts(Split::Train);
  std::vector<RunManifest> out;
  for (std::size_t i = 0; i < runs; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "run-%03zu", i);
    out.push_back(sample_known_classes(bundle.label_space(), counts, ratio, splitmix64(seed + i), id));
  }
  return out;
}

RunResult execute_run(const DatasetBundle& bundle, const RunManifest& manifest,
                      const ExperimentOptions& options, const fs::path& run_dir) {
  DatasetBundle data;
  if (options.reexport_dir) {
    const auto dir = *options.reexport_dir / manifest.run_id;
    data = load_bundle(dir / "manifest.json", dir / "records.csv");
    if (data.label_space().class_names() != manifest.known_classes)
      throw ValidationError("re-exported bundle for " + manifest.run_id +
                            " does not match the run's known classes");
  } else {
    data = restrict_bundle(bundle, manifest, LogitPolicy::Project);
  }

  const auto model = fit_smdn(data, options.smdn);
  RunResult result;
  result.manifest = manifest;
  result.temperature = model.calibration.temperature;

  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    io::write_json(run_dir / "manifest.json", io::manifest_to_json(manifest));
  }
  nlohmann::json methods = nlohmann::json::object();
  for (auto method : kAllMethods) {
    const auto preds = predict_split(data, model, method);
    result.reports.push_back(evaluate(preds, data));
    methods[std::string(to_string(method))] = io::report_to_json(result.reports.back());
    if (!run_dir.empty())
      io::write_predictions(run_dir / ("predictions-" + std::string(to_string(method)) + ".csv"), preds);
  }
  if (!run_dir.empty()) {
    io::write_json(run_dir / "report.json",
                   {{"run_id", manifest.run_id},
                    {"temperature", result.temperature},
                    {"lof_threshold", model.lof.threshold()},
                    {"methods", methods}});
  }
  return result;
}

ExperimentResult run_experiment(const DatasetBundle& bundle, const ExperimentOptions& options,
                                const fs::path& out_dir) {
  if (options.runs == 0) throw PreconditionError("experiment needs at least one run");
  const auto manifests = plan_runs(bundle, options.ratio, options.runs, options.seed);

  ExperimentResult result;
  result.runs.resize(manifests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      try {
        const auto dir = out_dir.empty() ? fs::path() : out_dir / "runs" / manifests[i].run_id;
        result.runs[i] = execute_run(bundle, manifests[i], options, dir);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, manifests.size()));
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  nlohmann::json methods = nlohmann::json::object();
  for (std::size_t m = 0; m < std::size(kAllMethods); ++m) {
    std::vector<double> all, known, unknown;
    for (const auto& run : result.runs) {
      all.push_back(run.reports[m].macro_f1_all);
      known.push_back(run.reports[m].macro_f1_known);
      unknown.push_back(run.reports[m].f1_unknown);
    }
    methods[std::string(to_string(kAllMethods[m]))] = {
        {"macro_f1_all", io::aggregate_to_json(aggregate(all))},
        {"macro_f1_known", io::aggregate_to_json(aggregate(known))},
        {"f1_unknown", io::aggregate_to_json(aggregate(unknown))}};
  }
  std::vector<std::string> run_ids;
  std::vector<double> temperatures;
  for (const auto& run : result.runs) {
    run_ids.push_back(run.manifest.run_id);
    temperatures.push_back(run.temperature);
  }
  result.aggregate = {{"known_ratio", options.ratio},
                      {"runs", options.runs},
                      {"seed", options.seed},
                      {"prng", "mt19937_64, run seed = splitmix64(seed + i)"},
                      {"alpha", options.smdn.alpha},
                      {"k", options.smdn.k},
                      {"fusion_rule", std::string(to_string(options.smdn.fusion_rule))},
                      {"run_ids", run_ids},
                      {"temperature", io::aggregate_to_json(aggregate(temperatures))},
                      {"methods", methods}};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    io::write_json(out_dir / "aggregate.json", result.aggregate);
  }
  return result;
}

}  // namespace smdn
