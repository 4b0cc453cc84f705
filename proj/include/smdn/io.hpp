#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdn/calibration.hpp"
#include "smdn/eval.hpp"
#include "smdn/fusion.hpp"
#include "smdn/lof.hpp"
#include "smdn/rejection.hpp"

namespace smdn::io {

using nlohmann::json;

json read_json(const std::filesystem::path& path);
/// Writes `value.dump(2)` plus a trailing newline.
void write_json(const std::filesystem::path& path, const json& value);

json calibration_to_json(const TemperatureFit& fit, std::size_t n_val);
TemperatureFit calibration_from_json(const json& j);

json thresholds_to_json(const SofterMaxModel& model);
SofterMaxModel thresholds_from_json(const json& j);

json platt_to_json(const PlattScaler& scaler);
PlattScaler platt_from_json(const json& j);

/// lof.json body; the training matrix and its per-point statistics live in
/// `train_ref`, a CSV written by write_lof_train.
json lof_to_json(const LofModel& model, const std::string& train_ref);
void write_lof_train(const LofModel& model, const std::filesystem::path& path);
LofModel lof_from_json(const json& j, const std::filesystem::path& base_dir);

/// Writes smdn-model.json and its component files (calib.json,
/// thresholds.json, doc-thresholds.json, lof.json, lof-train.csv) into the
/// directory of `model_path`.
void save_smdn_model(const SmdnModel& model, std::size_t n_val, const std::filesystem::path& model_path);
SmdnModel load_smdn_model(const std::filesystem::path& model_path);

json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const json& j);

json report_to_json(const EvalReport& report);
json aggregate_to_json(const Aggregate& agg);

/// `id,decision,p_sm,p_lof,p_joint,confidence`; absent probabilities are
/// written as empty fields.
void write_predictions(const std::filesystem::path& path, std::span<const OpenSetPrediction> predictions);
std::vector<OpenSetPrediction> read_predictions(const std::filesystem::path& path);

}  // namespace smdn::io
