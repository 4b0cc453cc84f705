// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: acceptance [path/to/smdn]
//
// With a CLI path the end-to-end and determinism checks run the real binary
// as a subprocess; otherwise they call the same entry point in-process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "smdn/calibration.hpp"
#include "smdn/cli.hpp"
#include "smdn/data_model.hpp"
#include "smdn/eval.hpp"
#include "smdn/experiment.hpp"
#include "smdn/fixtures.hpp"
#include "smdn/fusion.hpp"
#include "smdn/lof.hpp"
#include "smdn/random.hpp"
#include "smdn/rejection.hpp"

namespace fs = std::filesystem;
using namespace smdn;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string g_cli;

int cli(const std::vector<std::string>& args) {
  if (g_cli.empty()) {
    std::vector<std::string> argv{"smdn"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = run_cli(argv, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
  }
  std::string cmd = "'" + g_cli + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : 1;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Scratch {
  fs::path path;
  Scratch() {
    path = fs::temp_directory_path() / ("smdn-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

double unknown_f1(const DatasetBundle& bundle, const SmdnModel& model, Method method) {
  return evaluate(predict_split(bundle, model, method), bundle).f1_unknown;
}

// 1. LOF oracle equivalence
Outcome lof_oracle() {
  Rng rng(101);
  const std::size_t ks[] = {3, 5, 20};
  double worst = 0.0, lib_seconds = 0.0;
  std::size_t compared = 0;
  for (int d = 0; d < 20; ++d) {
    const std::size_t k = ks[d % 3];
    const std::size_t n = k + 1 + rng.next() % (200 - k);
    const std::size_t dim = 1 + rng.next() % 8;
    oracle::Points train(n, oracle::Vec(dim));
    for (auto& p : train)
      for (auto& v : p) v = d % 4 == 3 ? std::round(rng.normal(0.0, 2.0)) : rng.normal(0.0, 1.0);
    oracle::Points queries(25, oracle::Vec(dim));
    for (auto& q : queries)
      for (auto& v : q) v = rng.normal(0.0, 2.0);

    FeatureMatrix tm, qm;
    for (const auto& p : train) tm.append_row(p);
    for (const auto& q : queries) qm.append_row(q);
    const auto t0 = Clock::now();
    const LofModel model(tm, k);
    const auto query_scores = model.score_batch(qm);
    const auto in_sample = model.in_sample_scores();
    lib_seconds += seconds_since(t0);

    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (std::size_t i = 0; i < queries.size(); ++i, ++compared)
      worst = std::max(worst, rel(query_scores[i], oracle::novelty_lof(train, queries[i], k)));
    for (std::size_t i = 0; i < n; ++i, ++compared)
      worst = std::max(worst, rel(in_sample[i], oracle::in_sample_lof(train, i, k)));
  }
  return {worst <= 1e-9 && lib_seconds < 5.0,
          std::to_string(compared) + " scores, max rel diff " + fmt(worst, 3) + " (tol 1e-9), library time " +
              fmt(lib_seconds, 3) + " s (limit 5 s)"};
}

// 2. Temperature recovery
struct Slice {
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> labels;
  std::vector<LabeledLogits> view() const {
    std::vector<LabeledLogits> v;
    for (std::size_t i = 0; i < logits.size(); ++i) v.push_back({logits[i], labels[i]});
    return v;
  }
};

Outcome temperature_recovery() {
  Outcome o;
  Rng rng(202);
  std::string notes;
  for (int b = 0; b < 3; ++b) {
    Slice s;
    for (int i = 0; i < 5000; ++i) {
      std::vector<double> z(5);
      for (auto& v : z) v = rng.normal(0.0, 2.0 + b);
      s.labels.push_back(rng.categorical(softmax(z)));
      s.logits.push_back(std::move(z));
    }
    const double t1 = fit_temperature(s.view()).temperature;
    o.pass &= t1 >= 0.95 && t1 <= 1.05;
    notes += "T=" + fmt(t1);
    for (double c : {1.5, 2.0, 3.0}) {
      Slice scaled = s;
      for (auto& z : scaled.logits)
        for (auto& v : z) v *= c;
      const auto fit = fit_temperature(scaled.view());
      o.pass &= std::abs(fit.temperature - c) <= 0.05 * c;
      if (b == 0) {
        // Grid on a 1000-example prefix keeps the exhaustive search cheap.
        Slice head;
        head.logits.assign(scaled.logits.begin(), scaled.logits.begin() + 1000);
        head.labels.assign(scaled.labels.begin(), scaled.labels.begin() + 1000);
        const double lt = std::log(fit_temperature(head.view()).temperature);
        const double grid = oracle::grid_argmin(
            [&](double x) { return oracle::mean_nll(head.logits, head.labels, std::exp(x)); }, std::log(0.25),
            std::log(8.0), 1e-3);
        o.pass &= std::abs(lt - grid) <= 1e-3;
        notes += " grid|dlogT|=" + fmt(std::abs(lt - grid), 2);
      }
      notes += " " + fmt(c, 2) + "x->" + fmt(fit.temperature);
    }
    notes += b < 2 ? "; " : "";
  }
  o.detail = notes;
  return o;
}

// 3. Argmax invariance
Outcome argmax_invariance() {
  Rng rng(303);
  std::size_t mismatches = 0, total = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> z(2 + rng.next() % 20);
    for (auto& v : z) v = rng.normal(0.0, 1.0 + 10.0 * rng.uniform());
    const auto ref = argmax(softmax(z));
    for (double t : {0.5, 1.0, 1.44, 5.0}) {
      ++total;
      mismatches += argmax(softermax(z, t)) != ref;
    }
  }
  return {mismatches == 0, std::to_string(total - mismatches) + "/" + std::to_string(total) + " agree"};
}

// 4. Threshold law
Outcome threshold_law() {
  Rng rng(404);
  std::size_t bad = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double mu = rng.uniform(), sigma = rng.uniform(0.0, 0.5), alpha = rng.uniform(0.0, 5.0);
    const double t = class_threshold(mu, sigma, alpha);
    bad += !(t == std::max(0.5, mu - alpha * sigma) && t >= 0.5);
  }
  return {bad == 0, std::to_string(n - bad) + "/" + std::to_string(n) + " triples satisfy the law"};
}

// 5. Boundary anchoring
Outcome boundary_anchoring() {
  double worst = 0.0;
  std::size_t fitted = 0;
  for (const auto& preset : fixtures::preset_names())
    for (std::uint64_t seed : {1, 2, 3}) {
      auto bundle = fixtures::generate(preset, seed);
      if (bundle.split(Split::Test).size() == 0) continue;
      const auto model = fit_smdn(bundle);
      worst = std::max(worst, std::abs(model.platt_sm.probability(0.0) - 0.5));
      worst = std::max(worst, std::abs(model.platt_lof.probability(model.lof.threshold()) - 0.5));
      fitted += 2;
    }
  return {worst <= 1e-12, std::to_string(fitted) + " scalers, max |p(boundary) - 0.5| = " + fmt(worst, 3) +
                              " (tol 1e-12)"};
}

// 6. Metric oracle
Outcome metric_oracle() {
  Rng rng(606);
  std::size_t exact = 0, total = 0;
  for (int m = 0; m < 50; ++m) {
    const std::size_t n = 2 + rng.next() % 10;
    std::vector<std::vector<long>> rows(n, std::vector<long>(n));
    ConfusionMatrix cm(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        rows[i][j] = rng.next() % 5 == 0 ? 0 : static_cast<long>(rng.next() % 100);
        cm(i, j) = static_cast<std::uint64_t>(rows[i][j]);
      }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (const auto& subset : {all, std::vector<std::size_t>(all.begin(), all.end() - 1),
                               std::vector<std::size_t>{n - 1}}) {
      const auto s = macro_scores(cm, subset);
      double p = 0.0, r = 0.0;
      for (auto c : subset) {
        p += oracle::class_pr(rows, c).precision;
        r += oracle::class_pr(rows, c).recall;
      }
      p /= static_cast<double>(subset.size());
      r /= static_cast<double>(subset.size());
      ++total;
      exact += s.precision == p && s.recall == r && s.f1 == oracle::macro_f1(rows, subset);
    }
  }

  double worst_ece = 0.0;
  for (int b = 0; b < 20; ++b) {
    const std::size_t n = 50 + rng.next() % 500, classes = 2 + rng.next() % 6, bins = 5 + rng.next() % 20;
    const double t = rng.uniform(0.5, 3.0);
    std::vector<std::vector<double>> logits(n, std::vector<double>(classes));
    std::vector<LabeledLogits> ex;
    std::vector<double> conf;
    std::vector<bool> correct;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : logits[i]) v = rng.normal(0.0, 3.0);
      const std::size_t y = rng.next() % classes;
      ex.push_back({logits[i], y});
      double denom = 0.0;
      for (double v : logits[i]) denom += std::exp(v / t);
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c)
        if (logits[i][c] > logits[i][best]) best = c;
      conf.push_back(std::exp(logits[i][best] / t) / denom);
      correct.push_back(best == y);
    }
    worst_ece = std::max(worst_ece, std::abs(ece(ex, t, bins).ece - oracle::ece(conf, correct, bins)));
  }
  return {exact == total && worst_ece <= 1e-12,
          std::to_string(exact) + "/" + std::to_string(total) + " exact macro P/R/F1, max ECE diff " +
              fmt(worst_ece, 3) + " (tol 1e-12)"};
}

// Rejects anything farther from its nearest train centroid than the largest
// train-to-own-centroid distance.
double nearest_centroid_unknown_f1(const DatasetBundle& bundle) {
  const auto& space = bundle.label_space();
  const std::size_t n = space.n_classes(), d = space.feature_dim();
  std::vector<std::vector<double>> centroid(n, std::vector<double>(d, 0.0));
  std::vector<double> count(n, 0.0);
  for (const auto* r : bundle.split(Split::Train)) {
    const auto c = bundle.gold_index(*r);
    for (std::size_t j = 0; j < d; ++j) centroid[c][j] += r->features[j];
    count[c] += 1.0;
  }
  for (std::size_t c = 0; c < n; ++c)
    for (auto& v : centroid[c]) v /= count[c];
  double radius = 0.0;
  for (const auto* r : bundle.split(Split::Train))
    radius = std::max(radius, oracle::dist(r->features, centroid[bundle.gold_index(*r)]));

  std::vector<OpenSetPrediction> preds;
  for (const auto* r : bundle.split(Split::Test)) {
    std::size_t best = 0;
    double best_d = oracle::dist(r->features, centroid[0]);
    for (std::size_t c = 1; c < n; ++c) {
      const double dc = oracle::dist(r->features, centroid[c]);
      if (dc < best_d) best_d = dc, best = c;
    }
    OpenSetPrediction p;
    p.id = r->id;
    p.decision = best_d > radius ? std::string(kUnknownLabel) : space.class_names()[best];
    preds.push_back(p);
  }
  return evaluate(preds, bundle).f1_unknown;
}

// 7. End-to-end separable synthetic through the CLI
Outcome end_to_end(const fs::path& scratch) {
  const auto t0 = Clock::now();
  const fs::path dir = scratch / "e2e";
  const auto data = std::vector<std::string>{"--data", (dir / "records.csv").string(), "--manifest",
                                             (dir / "manifest.json").string()};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), data.begin(), data.end());
    return a;
  };
  bool ok = cli({"fixtures", "--preset", "gaussian-3+1", "--seed", "0", "--out-dir", dir.string()}) == 0;
  ok = ok && cli(with({"fit", "--out", (dir / "smdn-model.json").string()})) == 0;
  double f1[2] = {0.0, 0.0};
  const char* methods[] = {"smdn", "softmax_t"};
  for (int m = 0; m < 2 && ok; ++m) {
    const auto preds = dir / (std::string("pred-") + methods[m] + ".csv");
    const auto report = dir / (std::string("report-") + methods[m] + ".json");
    ok = cli(with({"predict", "--method", methods[m], "--model", (dir / "smdn-model.json").string(), "--out",
                   preds.string()})) == 0 &&
         cli(with({"eval", "--predictions", preds.string(), "--out", report.string()})) == 0;
    if (ok) f1[m] = nlohmann::json::parse(read_file(report))["f1_unknown"].get<double>();
  }
  const double secs = seconds_since(t0);
  if (!ok) return {false, "CLI pipeline failed"};
  const double oracle_f1 = nearest_centroid_unknown_f1(load_bundle(dir / "manifest.json", dir / "records.csv"));
  return {f1[0] >= 0.90 && f1[0] >= f1[1] && oracle_f1 >= 0.95 && secs < 30.0,
          "unknown F1 smdn " + fmt(f1[0]) + " (>= 0.90), softmax_t " + fmt(f1[1]) + ", nearest-centroid oracle " +
              fmt(oracle_f1) + " (>= 0.95), " + fmt(secs, 3) + " s (limit 30 s)"};
}

// 8. Method ordering on the held-out-unknown fixture suite
Outcome method_ordering() {
  Outcome o;
  double worst_margin = 1e9;
  for (const char* preset : {"gaussian-3+1", "gaussian-6+2"})
    for (std::uint64_t seed : {7, 11, 13}) {
      const auto bundle = fixtures::generate(preset, seed);
      const auto model = fit_smdn(bundle);
      const double smdn = unknown_f1(bundle, model, Method::Smdn);
      const double best = std::max(unknown_f1(bundle, model, Method::SofterMax),
                                   unknown_f1(bundle, model, Method::Lof));
      worst_margin = std::min(worst_margin, smdn - best);
      o.pass &= smdn >= best - 0.05;
    }
  o.detail = "6 bundles (gaussian-3+1, gaussian-6+2 x seeds 7/11/13), min smdn - max(softermax, lof) = " +
             fmt(worst_margin) + " (>= -0.05)";
  return o;
}

// Not gated: known-class protocol on the 8-class preset.
std::string protocol_summary() {
  const auto bundle = fixtures::generate("gaussian-8", 7);
  std::string line;
  for (double ratio : {0.25, 0.5, 0.75}) {
    ExperimentOptions opts;
    opts.ratio = ratio;
    opts.runs = 10;
    opts.seed = 7;
    opts.jobs = 4;
    const auto res = run_experiment(bundle, opts, {});
    const auto& m = res.aggregate["methods"];
    line += "ratio " + fmt(ratio, 2) + ": smdn " + fmt(m["smdn"]["f1_unknown"]["mean"].get<double>(), 3) +
            " softermax " + fmt(m["softermax"]["f1_unknown"]["mean"].get<double>(), 3) + " lof " +
            fmt(m["lof"]["f1_unknown"]["mean"].get<double>(), 3) + (ratio < 0.75 ? "; " : "");
  }
  return line;
}

// 9. Determinism
Outcome determinism(const fs::path& scratch) {
  const fs::path data = scratch / "det-data";
  if (cli({"fixtures", "--preset", "gaussian-8", "--seed", "3", "--out-dir", data.string()}) != 0)
    return {false, "fixtures failed"};
  std::string bytes[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = scratch / ("det-run-" + std::to_string(i));
    if (cli({"experiment", "--data", (data / "records.csv").string(), "--manifest",
             (data / "manifest.json").string(), "--ratio", "0.5", "--runs", "5", "--seed", "42", "--jobs",
             i == 0 ? "1" : "4", "--out-dir", out.string()}) != 0)
      return {false, "experiment failed"};
    bytes[i] = read_file(out / "aggregate.json");
  }
  return {!bytes[0].empty() && bytes[0] == bytes[1],
          "aggregate.json " + std::to_string(bytes[0].size()) + " bytes, " +
              (bytes[0] == bytes[1] ? "identical" : "different") + " across two invocations (jobs 1 and 4)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  Scratch scratch;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"lof_oracle_equivalence", lof_oracle},
      {"temperature_recovery", temperature_recovery},
      {"argmax_invariance", argmax_invariance},
      {"threshold_law", threshold_law},
      {"boundary_anchoring", boundary_anchoring},
      {"metric_oracle", metric_oracle},
      {"end_to_end_separable", [&] { return end_to_end(scratch.path); }},
      {"method_ordering", method_ordering},
      {"determinism", [&] { return determinism(scratch.path); }},
  };

  int failed = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  try {
    std::cout << "INFO protocol_gaussian_8 (mean unknown F1 over 10 runs): " << protocol_summary() << std::endl;
  } catch (const std::exception& e) {
    std::cout << "INFO protocol_gaussian_8: exception: " << e.what() << std::endl;
  }
  std::cout << (failed == 0 ? "all acceptance checks passed" : std::to_string(failed) + " acceptance check(s) failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
