#include "smdn/io.hpp"

#include <fstream>
#include <sstream>

#include "smdn/error.hpp"

namespace smdn::io {

namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

json calibration_to_json(const TemperatureFit& fit, std::size_t n_val) {
  return {{"temperature", fit.temperature},
          {"final_nll", fit.final_nll},
          {"n_val", n_val},
          {"hit_bound", fit.hit_bound},
          {"n_evaluations", fit.search_trace.size()}};
}

TemperatureFit calibration_from_json(const json& j) {
  TemperatureFit fit;
  fit.temperature = j.at("temperature").get<double>();
  fit.final_nll = j.at("final_nll").get<double>();
  fit.hit_bound = j.value("hit_bound", false);
  if (!(fit.temperature > 0.0)) throw ValidationError("calibration temperature must be positive");
  return fit;
}

json thresholds_to_json(const SofterMaxModel& model) {
  json per_class = json::array();
  for (const auto& c : model.per_class)
    per_class.push_back({{"label", c.label}, {"mu", c.mu}, {"sigma", c.sigma}, {"t", c.t}});
  return {{"temperature", model.temperature},
          {"alpha", model.alpha},
          {"stat_split", std::string(to_string(model.stat_split))},
          {"sigma_estimator", "population"},
          {"per_class", per_class}};
}

SofterMaxModel thresholds_from_json(const json& j) {
  SofterMaxModel model;
  model.temperature = j.at("temperature").get<double>();
  model.alpha = j.at("alpha").get<double>();
  model.stat_split = parse_split(j.at("stat_split").get<std::string>());
  for (const auto& c : j.at("per_class")) {
    ClassThreshold ct{c.at("label").get<std::string>(), c.at("mu").get<double>(),
                      c.at("sigma").get<double>(), c.at("t").get<double>()};
    if (ct.t != class_threshold(ct.mu, ct.sigma, model.alpha))
      throw ValidationError("threshold for '" + ct.label +
                            "' is not max(0.5, mu - alpha * sigma) of its stored statistics");
    model.per_class.push_back(std::move(ct));
  }
  return model;
}

json platt_to_json(const PlattScaler& s) {
  return {{"a", s.a},
          {"b", s.b},
          {"boundary", s.boundary},
          {"direction", "higher_is_novel"},
          {"source", std::string(to_string(s.source))}};
}

PlattScaler platt_from_json(const json& j) {
  PlattScaler s;
  s.a = j.at("a").get<double>();
  s.b = j.at("b").get<double>();
  s.boundary = j.at("boundary").get<double>();
  s.source = parse_platt_source(j.at("source").get<std::string>());
  return s;
}

json lof_to_json(const LofModel& model, const std::string& train_ref) {
  const auto& st = model.threshold_stats();
  return {{"k", model.k()},
          {"alpha", st.alpha},
          {"threshold", model.threshold()},
          {"threshold_stats", {{"mu", st.mu}, {"sigma", st.sigma}, {"alpha", st.alpha},
                               {"calib_split", "val"}, {"rule", "mu + alpha * sigma"}}},
          {"distance", "euclidean"},
          {"n_train", model.train_features().rows()},
          {"feature_dim", model.dim()},
          {"train_ref", train_ref}};
}

void write_lof_train(const LofModel& model, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::string buf = "kdist,lrd,saturated";
  for (std::size_t i = 0; i < model.dim(); ++i) buf += ",feat_" + std::to_string(i);
  buf += '\n';
  const auto& x = model.train_features();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    buf += format_real(model.train_kdist()[r]);
    buf += ',';
    buf += format_real(model.train_lrd()[r]);
    buf += model.train_saturated()[r] ? ",1" : ",0";
    for (double v : x.row(r)) (buf += ',') += format_real(v);
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error("failed writing " + path.string());
}

LofModel lof_from_json(const json& j, const fs::path& base_dir) {
  const auto k = j.at("k").get<std::size_t>();
  const auto& ts = j.at("threshold_stats");
  LofThresholdStats stats{ts.at("mu").get<double>(), ts.at("sigma").get<double>(),
                          ts.at("alpha").get<double>()};
  const fs::path ref = base_dir / j.at("train_ref").get<std::string>();
  std::ifstream in(ref, std::ios::binary);
  if (!in) throw ValidationError("cannot open LOF training matrix " + ref.string());

  std::string line;
  std::getline(in, line);
  std::size_t dim = 0;
  {
    std::size_t commas = 0;
    for (char c : line) commas += c == ',';
    if (commas < 3) throw ValidationError(ref.string() + ": malformed header");
    dim = commas - 2;
  }
  std::vector<double> kdist, lrd, data;
  std::vector<char> saturated;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != dim + 3) throw ValidationError(row, ref.string() + ": wrong column count");
    try {
      kdist.push_back(parse_real(f[0]));
      lrd.push_back(parse_real(f[1]));
      saturated.push_back(f[2] == "1");
      for (std::size_t i = 0; i < dim; ++i) data.push_back(parse_real(f[3 + i]));
    } catch (const ValidationError& e) {
      throw ValidationError(row, ref.string() + ": " + e.what());
    }
  }
  LofModel model(FeatureMatrix(dim, std::move(data)), k, std::move(kdist), std::move(lrd),
                 std::move(saturated), stats);
  if (j.contains("threshold") && j["threshold"].get<double>() != model.threshold())
    throw ValidationError("LOF threshold does not match mu + alpha * sigma");
  return model;
}

void save_smdn_model(const SmdnModel& model, std::size_t n_val, const fs::path& model_path) {
  const fs::path dir = model_path.has_parent_path() ? model_path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const auto calib = calibration_to_json(model.calibration, n_val);
  const auto sm = thresholds_to_json(model.softermax);
  const auto doc = thresholds_to_json(model.doc_softmax);
  const auto lof = lof_to_json(model.lof, "lof-train.csv");
  write_json(dir / "calib.json", calib);
  write_json(dir / "thresholds.json", sm);
  write_json(dir / "doc-thresholds.json", doc);
  write_json(dir / "lof.json", lof);
  write_lof_train(model.lof, dir / "lof-train.csv");

  json j = {{"calibration", calib},
            {"softermax", sm},
            {"doc_softmax", doc},
            {"lof", lof},
            {"platt", {{"softermax", platt_to_json(model.platt_sm)},
                       {"lof", platt_to_json(model.platt_lof)}}},
            {"fusion_rule", std::string(to_string(model.fusion_rule))},
            {"joint_threshold", model.joint_threshold},
            {"files", {{"calibration", "calib.json"},
                       {"softermax", "thresholds.json"},
                       {"doc_softmax", "doc-thresholds.json"},
                       {"lof", "lof.json"}}}};
  write_json(model_path, j);
}

SmdnModel load_smdn_model(const fs::path& model_path) {
  const auto j = read_json(model_path);
  const fs::path dir = model_path.has_parent_path() ? model_path.parent_path() : fs::path(".");
  try {
    SmdnModel m;
    m.calibration = calibration_from_json(j.at("calibration"));
    m.softermax = thresholds_from_json(j.at("softermax"));
    m.doc_softmax = thresholds_from_json(j.at("doc_softmax"));
    m.lof = lof_from_json(j.at("lof"), dir);
    m.platt_sm = platt_from_json(j.at("platt").at("softermax"));
    m.platt_lof = platt_from_json(j.at("platt").at("lof"));
    m.fusion_rule = parse_fusion_rule(j.at("fusion_rule").get<std::string>());
    m.joint_threshold = j.at("joint_threshold").get<double>();
    if (m.joint_threshold != 0.5) throw ValidationError("joint_threshold must be 0.5");
    if (m.softermax.temperature != m.calibration.temperature)
      throw ValidationError("thresholds were fitted at a different temperature than calibration");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(model_path.string() + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw ValidationError(model_path.string() + ": " + e.what());
  }
}

json manifest_to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},
          {"seed", m.seed},
          {"known_ratio", m.known_ratio},
          {"known_classes", m.known_classes},
          {"sampler", m.sampler}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.known_ratio = j.at("known_ratio").get<double>();
  m.known_classes = j.at("known_classes").get<std::vector<std::string>>();
  m.sampler = j.value("sampler", std::string("weighted_without_replacement"));
  return m;
}

json report_to_json(const EvalReport& r) {
  json confusion = json::array();
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < r.confusion.size(); ++k) row.push_back(r.confusion(i, k));
    confusion.push_back(row);
  }
  json per_class = json::array();
  for (const auto& c : r.per_class)
    per_class.push_back({{"label", c.label}, {"precision", c.precision}, {"recall", c.recall},
                         {"f1", c.f1}, {"support", c.support}});
  return {{"macro_f1_all", r.macro_f1_all},
          {"macro_f1_known", r.macro_f1_known},
          {"f1_unknown", r.f1_unknown},
          {"labels", r.labels},
          {"confusion", confusion},
          {"per_class", per_class}};
}

json aggregate_to_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"ci95_low", a.ci_low}, {"ci95_high", a.ci_high}, {"per_run", a.per_run}};
}

void write_predictions(const fs::path& path, std::span<const OpenSetPrediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::string buf = "id,decision,p_sm,p_lof,p_joint,confidence\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& p : predictions) {
    buf += p.id;
    buf += ',';
    buf += p.decision;
    buf += ',';
    buf += opt(p.p_sm);
    buf += ',';
    buf += opt(p.p_lof);
    buf += ',';
    buf += opt(p.p_joint);
    buf += ',';
    buf += format_real(p.confidence_score);
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<OpenSetPrediction> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open predictions " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "id,decision,p_sm,p_lof,p_joint,confidence")
    throw ValidationError(path.string() + ": unexpected predictions header");
  std::vector<OpenSetPrediction> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw ValidationError(row, "predictions row needs 6 columns");
    OpenSetPrediction p;
    p.id = f[0];
    p.decision = f[1];
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_real(s);
    };
    try {
      p.p_sm = opt(f[2]);
      p.p_lof = opt(f[3]);
      p.p_joint = opt(f[4]);
      p.confidence_score = parse_real(f[5]);
    } catch (const ValidationError& e) {
      throw ValidationError(row, e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace smdn::io
