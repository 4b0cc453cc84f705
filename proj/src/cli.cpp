#include "smdn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "smdn/error.hpp"
#include "smdn/experiment.hpp"
#include "smdn/fixtures.hpp"
#include "smdn/io.hpp"

namespace smdn {

namespace fs = std::filesystem;

namespace {

struct BundlePaths {
  std::string data;
  std::string manifest;
};

void add_bundle_flags(CLI::App* cmd, BundlePaths& p) {
  cmd->add_option("--data", p.data, "Records CSV (id,split,gold_label,logit_*,feat_*)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--manifest", p.manifest, "Label-space manifest JSON")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_search_flags(CLI::App* cmd, TemperatureSearch& s) {
  cmd->add_option("--t-lo", s.t_lo, "Lower temperature bound")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--t-hi", s.t_hi, "Upper temperature bound")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", s.tol, "Golden-section tolerance on log T")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* cmd, SmdnOptions& o, std::string& fusion, std::string& stat_split) {
  add_search_flags(cmd, o.search);
  cmd->add_option("--alpha", o.alpha,
                  "Std-dev multiplier for SofterMax class thresholds and the LOF threshold (default 2)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--k", o.k, "LOF neighbor count (default 20)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fusion", fusion, "SMDN fusion rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "max", "either"}));
  cmd->add_option("--stat-split", stat_split, "Split feeding the per-class threshold statistics")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "val"}));
}

void check_search(const TemperatureSearch& s) {
  if (!(s.t_lo < s.t_hi)) throw CLI::ValidationError("--t-lo/--t-hi", "--t-lo must be below --t-hi");
}

DatasetBundle load(const BundlePaths& p) { return load_bundle(p.manifest, p.data); }

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-set post-processing for pre-trained classifiers: SofterMax, LOF and SMDN", "smdn"};
  app.require_subcommand(1);

  // calibrate
  BundlePaths cal_paths;
  TemperatureSearch cal_search;
  std::size_t cal_bins = 15;
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Fit the softmax temperature on the val split");
  add_bundle_flags(calibrate, cal_paths);
  add_search_flags(calibrate, cal_search);
  calibrate->add_option("--bins", cal_bins, "ECE bin count (default 15)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--out", cal_out, "Output calib.json")->required();

  // fit
  BundlePaths fit_paths;
  SmdnOptions fit_opts;
  std::string fit_fusion = "mean";
  std::string fit_stat = "train";
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "Fit temperature, thresholds, LOF and Platt scalers");
  add_bundle_flags(fit, fit_paths);
  add_model_flags(fit, fit_opts, fit_fusion, fit_stat);
  fit->add_option("--out", fit_out, "Output smdn-model.json; component files go alongside")->required();

  // predict
  BundlePaths pred_paths;
  std::string pred_method;
  std::string pred_model;
  std::string pred_split = "test";
  std::string pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "Open-set predictions for one split");
  add_bundle_flags(predict_cmd, pred_paths);
  predict_cmd->add_option("--method", pred_method, "Prediction rule")
      ->required()
      ->check(CLI::IsMember({"softmax_t", "doc_softmax", "softermax", "lof", "smdn"}));
  predict_cmd->add_option("--model", pred_model, "smdn-model.json from `fit` (not needed for softmax_t)");
  predict_cmd->add_option("--split", pred_split, "Split to predict")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test"}));
  predict_cmd->add_option("--out", pred_out, "Output predictions CSV")->required();

  // eval
  BundlePaths eval_paths;
  std::string eval_preds;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against the test split");
  add_bundle_flags(eval_cmd, eval_paths);
  eval_cmd->add_option("--predictions", eval_preds, "Predictions CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Output report.json")->required();

  // sample-known
  BundlePaths samp_paths;
  double samp_ratio = 0.5;
  std::size_t samp_runs = 10;
  std::uint64_t samp_seed = 0;
  std::string samp_out;
  bool samp_restrict = false;
  auto* sample = app.add_subcommand(
      "sample-known", "Draw known-class subsets (weighted sampling without replacement)");
  add_bundle_flags(sample, samp_paths);
  sample->add_option("--ratio", samp_ratio, "Fraction of classes kept as known")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  sample->add_option("--runs", samp_runs, "Number of run manifests (default 10)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sample->add_option("--seed", samp_seed, "PRNG seed")->capture_default_str();
  sample->add_option("--out-dir", samp_out, "Writes <out-dir>/<run_id>/manifest.json")->required();
  sample->add_flag("--write-restricted", samp_restrict,
                   "Also write each run's restricted bundle (marked requires_reexport)");

  // experiment
  BundlePaths exp_paths;
  ExperimentOptions exp_opts;
  std::string exp_fusion = "mean";
  std::string exp_stat = "train";
  std::string exp_out;
  std::string exp_reexport;
  auto* experiment = app.add_subcommand("experiment", "Multi-run known-class protocol with aggregate report");
  add_bundle_flags(experiment, exp_paths);
  add_model_flags(experiment, exp_opts.smdn, exp_fusion, exp_stat);
  experiment->add_option("--ratio", exp_opts.ratio, "Fraction of classes kept as known")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  experiment->add_option("--runs", exp_opts.runs, "Number of runs (default 10)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_option("--seed", exp_opts.seed, "PRNG seed")->capture_default_str();
  experiment->add_option("--jobs", exp_opts.jobs, "Runs executed concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_option("--reexport-dir", exp_reexport,
                         "Per-run re-exported bundles <dir>/<run_id>/{manifest.json,records.csv}; "
                         "without it the logits of dropped classes are projected away")
      ->check(CLI::ExistingDirectory);
  experiment->add_option("--out-dir", exp_out, "Writes runs/<run_id>/ and aggregate.json")->required();

  // fixtures
  std::string fx_preset;
  std::uint64_t fx_seed = 0;
  std::string fx_out;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Write a synthetic bundle");
  fixtures_cmd->add_option("--preset", fx_preset, "Fixture preset")
      ->required()
      ->check(CLI::IsMember(fixtures::preset_names()));
  fixtures_cmd->add_option("--seed", fx_seed, "PRNG seed")->capture_default_str();
  fixtures_cmd->add_option("--out-dir", fx_out, "Writes manifest.json and records.csv")->required();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*calibrate) {
      check_search(cal_search);
      const auto bundle = load(cal_paths);
      const auto val = labeled_logits(bundle, Split::Val);
      const auto fit_result = fit_temperature(val, cal_search);
      auto j = io::calibration_to_json(fit_result, val.size());
      j["n_bins"] = cal_bins;
      j["ece_uncalibrated"] = ece(val, 1.0, cal_bins).ece;
      j["ece_calibrated"] = ece(val, fit_result.temperature, cal_bins).ece;
      io::write_json(cal_out, j);
      out << "temperature " << fit_result.temperature << " (val NLL " << fit_result.final_nll << ")\n";
    } else if (*fit) {
      check_search(fit_opts.search);
      fit_opts.fusion_rule = parse_fusion_rule(fit_fusion);
      fit_opts.stat_split = parse_split(fit_stat);
      const auto bundle = load(fit_paths);
      const auto model = fit_smdn(bundle, fit_opts);
      io::save_smdn_model(model, labeled_logits(bundle, Split::Val).size(), fit_out);
      out << "temperature " << model.calibration.temperature << ", LOF threshold "
          << model.lof.threshold() << "\n";
    } else if (*predict_cmd) {
      const auto method = parse_method(pred_method);
      const auto bundle = load(pred_paths);
      std::vector<OpenSetPrediction> preds;
      if (pred_model.empty()) {
        if (method != Method::SoftmaxT)
          throw PreconditionError("--method " + pred_method +
                                  " needs a fitted model: pass --model smdn-model.json from `smdn fit`");
        for (const auto* r : bundle.split(parse_split(pred_split)))
          preds.push_back(predict_open_set(*r, bundle.label_space(), nullptr, method));
      } else {
        const auto model = io::load_smdn_model(pred_model);
        if (model.softermax.per_class.size() != bundle.label_space().n_classes())
          throw ValidationError("model and bundle disagree on the number of classes");
        preds = predict_split(bundle, model, method, parse_split(pred_split));
      }
      io::write_predictions(pred_out, preds);
    } else if (*eval_cmd) {
      const auto bundle = load(eval_paths);
      const auto preds = io::read_predictions(eval_preds);
      const auto report = evaluate(preds, bundle);
      io::write_json(eval_out, io::report_to_json(report));
      out << "f1_unknown " << report.f1_unknown << ", macro_f1_known " << report.macro_f1_known
          << ", macro_f1_all " << report.macro_f1_all << "\n";
    } else if (*sample) {
      const auto bundle = load(samp_paths);
      for (const auto& m : plan_runs(bundle, samp_ratio, samp_runs, samp_seed)) {
        const fs::path dir = fs::path(samp_out) / m.run_id;
        fs::create_directories(dir);
        io::write_json(dir / "manifest.json", io::manifest_to_json(m));
        if (samp_restrict) {
          const auto restricted = restrict_bundle(bundle, m, LogitPolicy::MarkReexport);
          save_bundle(restricted, dir / "bundle-manifest.json", dir / "records.csv");
        }
      }
    } else if (*experiment) {
      check_search(exp_opts.smdn.search);
      exp_opts.smdn.fusion_rule = parse_fusion_rule(exp_fusion);
      exp_opts.smdn.stat_split = parse_split(exp_stat);
      if (!exp_reexport.empty()) exp_opts.reexport_dir = exp_reexport;
      const auto bundle = load(exp_paths);
      const auto result = run_experiment(bundle, exp_opts, exp_out);
      for (std::size_t m = 0; m < std::size(kAllMethods); ++m) {
        const auto name = std::string(to_string(kAllMethods[m]));
        out << name << " f1_unknown mean "
            << result.aggregate["methods"][name]["f1_unknown"]["mean"].get<double>() << "\n";
      }
    } else if (*fixtures_cmd) {
      const auto bundle = fixtures::generate(fx_preset, fx_seed);
      fs::create_directories(fx_out);
      save_bundle(bundle, fs::path(fx_out) / "manifest.json", fs::path(fx_out) / "records.csv");
    }
  } catch (const CLI::ValidationError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace smdn
