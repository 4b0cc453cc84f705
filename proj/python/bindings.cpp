#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "smdn/calibration.hpp"
#include "smdn/cli.hpp"
#include "smdn/error.hpp"
#include "smdn/eval.hpp"
#include "smdn/experiment.hpp"
#include "smdn/fixtures.hpp"
#include "smdn/fusion.hpp"
#include "smdn/lof.hpp"
#include "smdn/rejection.hpp"

namespace py = pybind11;
using namespace smdn;

namespace {

using Rows = std::vector<std::vector<double>>;

FeatureMatrix to_matrix(const Rows& rows) {
  FeatureMatrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

std::vector<LabeledLogits> to_labeled(const Rows& logits, const std::vector<std::size_t>& labels) {
  if (logits.size() != labels.size()) throw PreconditionError("logits and labels differ in length");
  std::vector<LabeledLogits> out;
  for (std::size_t i = 0; i < logits.size(); ++i) out.push_back({logits[i], labels[i]});
  return out;
}

}  // namespace

PYBIND11_MODULE(_smdn, m) {
  m.doc() = "Open-set post-processing of classifier logits and features (SofterMax, LOF, SMDN)";

  // Base first: translators registered later take precedence.
  const auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

  // calibration
  m.def("softmax", [](const std::vector<double>& z) { return softmax(z); }, py::arg("logits"));
  m.def("softermax", [](const std::vector<double>& z, double t) { return softermax(z, t); },
        py::arg("logits"), py::arg("temperature"));
  m.def("nll",
        [](const Rows& logits, const std::vector<std::size_t>& labels, double t) {
          return nll(to_labeled(logits, labels), t);
        },
        py::arg("logits"), py::arg("labels"), py::arg("temperature"));

  py::class_<TemperatureFit>(m, "TemperatureFit")
      .def_readonly("temperature", &TemperatureFit::temperature)
      .def_readonly("final_nll", &TemperatureFit::final_nll)
      .def_readonly("search_trace", &TemperatureFit::search_trace)
      .def_readonly("hit_bound", &TemperatureFit::hit_bound);
  m.def("fit_temperature",
        [](const Rows& logits, const std::vector<std::size_t>& labels, double t_lo, double t_hi,
           double tol) { return fit_temperature(to_labeled(logits, labels), {t_lo, t_hi, tol}); },
        py::arg("logits"), py::arg("labels"), py::arg("t_lo") = 0.25, py::arg("t_hi") = 8.0,
        py::arg("tol") = 1e-4);
  m.def("ece",
        [](const Rows& logits, const std::vector<std::size_t>& labels, double t, std::size_t bins) {
          return ece(to_labeled(logits, labels), t, bins).ece;
        },
        py::arg("logits"), py::arg("labels"), py::arg("temperature"), py::arg("n_bins") = 15);

  // rejection thresholds
  m.def("class_threshold", &class_threshold, py::arg("mu"), py::arg("sigma"), py::arg("alpha") = 2.0);
  py::class_<ClassThreshold>(m, "ClassThreshold")
      .def_readonly("label", &ClassThreshold::label)
      .def_readonly("mu", &ClassThreshold::mu)
      .def_readonly("sigma", &ClassThreshold::sigma)
      .def_readonly("t", &ClassThreshold::t);
  py::class_<SofterMaxModel>(m, "SofterMaxModel")
      .def_readonly("temperature", &SofterMaxModel::temperature)
      .def_readonly("alpha", &SofterMaxModel::alpha)
      .def_readonly("per_class", &SofterMaxModel::per_class)
      .def("thresholds", &SofterMaxModel::thresholds)
      .def("confidence_score", [](const SofterMaxModel& model, const std::vector<double>& z) {
        const auto c = confidence_score(z, model);
        return py::make_tuple(c.score, c.best_class);
      });
  m.def("fit_thresholds",
        [](const Rows& logits, const std::vector<std::size_t>& labels,
           const std::vector<std::string>& class_names, double t, double alpha) {
          std::vector<std::span<const double>> views(logits.begin(), logits.end());
          return fit_thresholds(views, labels, class_names, t, alpha);
        },
        py::arg("logits"), py::arg("labels"), py::arg("class_names"), py::arg("temperature"),
        py::arg("alpha") = 2.0);

  // LOF
  py::class_<LofModel>(m, "LofModel")
      .def("score", [](const LofModel& lof, const std::vector<double>& q) { return lof.score(q); })
      .def("score_batch", [](const LofModel& lof, const Rows& q) { return lof.score_batch(to_matrix(q)); })
      .def("in_sample_scores", &LofModel::in_sample_scores)
      .def_property_readonly("k", &LofModel::k)
      .def_property_readonly("threshold", &LofModel::threshold);
  m.def("fit_lof",
        [](const Rows& train, std::size_t k, double alpha, const Rows& calib) {
          return fit_lof(to_matrix(train), k, alpha, to_matrix(calib));
        },
        py::arg("train"), py::arg("k") = 20, py::arg("alpha") = 2.0, py::arg("calib"));

  // fusion
  py::class_<PlattScaler>(m, "PlattScaler")
      .def_readonly("a", &PlattScaler::a)
      .def_readonly("b", &PlattScaler::b)
      .def_readonly("boundary", &PlattScaler::boundary)
      .def("probability", &PlattScaler::probability, py::arg("raw_score"));
  m.def("fit_platt",
        [](const std::vector<double>& scores, double boundary, const std::string& source) {
          return fit_platt(scores, boundary, parse_platt_source(source));
        },
        py::arg("scores"), py::arg("boundary"), py::arg("source"));

  // bundles and the full pipeline
  py::class_<DatasetBundle>(m, "DatasetBundle")
      .def_property_readonly("class_names", [](const DatasetBundle& b) { return b.label_space().class_names(); })
      .def_property_readonly("feature_dim", [](const DatasetBundle& b) { return b.label_space().feature_dim(); })
      .def("__len__", [](const DatasetBundle& b) { return b.records().size(); })
      .def("save", [](const DatasetBundle& b, const std::filesystem::path& manifest,
                      const std::filesystem::path& records) { save_bundle(b, manifest, records); });
  m.def("load_bundle", &load_bundle, py::arg("manifest_path"), py::arg("records_path"));
  m.def("fixture", [](const std::string& preset, std::uint64_t seed) { return fixtures::generate(preset, seed); },
        py::arg("preset"), py::arg("seed") = 0);

  py::class_<SmdnModel>(m, "SmdnModel")
      .def_property_readonly("temperature", [](const SmdnModel& s) { return s.calibration.temperature; })
      .def_readonly("softermax", &SmdnModel::softermax)
      .def_readonly("platt_sm", &SmdnModel::platt_sm)
      .def_readonly("platt_lof", &SmdnModel::platt_lof)
      .def_property_readonly("lof_threshold", [](const SmdnModel& s) { return s.lof.threshold(); });
  m.def("fit_smdn",
        [](const DatasetBundle& b, double alpha, std::size_t k, const std::string& fusion) {
          SmdnOptions o;
          o.alpha = alpha;
          o.k = k;
          o.fusion_rule = parse_fusion_rule(fusion);
          return fit_smdn(b, o);
        },
        py::arg("bundle"), py::arg("alpha") = 2.0, py::arg("k") = 20, py::arg("fusion") = "mean");
  m.def("evaluate",
        [](const DatasetBundle& b, const SmdnModel& model, const std::string& method) {
          const auto preds = predict_split(b, model, parse_method(method));
          const auto r = evaluate(preds, b);
          py::dict d;
          d["f1_unknown"] = r.f1_unknown;
          d["macro_f1_known"] = r.macro_f1_known;
          d["macro_f1_all"] = r.macro_f1_all;
          return d;
        },
        py::arg("bundle"), py::arg("model"), py::arg("method"));

  // metrics and sampling
  m.def("macro_f1",
        [](const std::vector<std::vector<std::uint64_t>>& rows, const std::vector<std::size_t>& subset) {
          ConfusionMatrix cm(rows.size());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) throw PreconditionError("confusion matrix must be square");
            for (std::size_t j = 0; j < rows.size(); ++j) cm(i, j) = rows[i][j];
          }
          return macro_f1(cm, subset);
        },
        py::arg("confusion"), py::arg("class_subset"));
  m.def("sample_known_classes",
        [](const std::vector<std::string>& names, const std::vector<std::size_t>& counts, double ratio,
           std::uint64_t seed) {
          return sample_known_classes(LabelSpace(names, 1), counts, ratio, seed).known_classes;
        },
        py::arg("class_names"), py::arg("train_counts"), py::arg("ratio"), py::arg("seed"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::vector<std::string> argv{"smdn"};
          argv.insert(argv.end(), args.begin(), args.end());
          std::ostringstream out, err;
          const int code = run_cli(argv, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
