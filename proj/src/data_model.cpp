#include "smdn/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "smdn/error.hpp"

namespace smdn {

namespace {

using nlohmann::json;

bool has_csv_metachar(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string expected_header(const LabelSpace& space) {
  std::string h = "id,split,gold_label";
  for (std::size_t i = 0; i < space.n_classes(); ++i) h += ",logit_" + std::to_string(i);
  for (std::size_t i = 0; i < space.feature_dim(); ++i) h += ",feat_" + std::to_string(i);
  return h;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw ValidationError("invalid split '" + std::string(text) +
                        "' (expected train, val or test)");
}

LabelSpace::LabelSpace(std::vector<std::string> class_names, std::size_t feature_dim)
    : class_names_(std::move(class_names)), feature_dim_(feature_dim) {
  if (class_names_.size() < 2)
    throw ValidationError("label space needs at least 2 classes, got " +
                          std::to_string(class_names_.size()));
  if (feature_dim_ < 1) throw ValidationError("feature_dim must be >= 1");
  std::set<std::string_view> seen;
  for (const auto& name : class_names_) {
    if (name.empty()) throw ValidationError("empty class name");
    if (name == kUnknownLabel)
      throw ValidationError("class names must not include the reserved label " +
                            std::string(kUnknownLabel));
    if (has_csv_metachar(name))
      throw ValidationError("class name '" + name + "' contains a CSV metacharacter");
    if (!seen.insert(name).second)
      throw ValidationError("duplicate class name '" + name + "'");
  }
}

int LabelSpace::index_of(std::string_view label) const {
  const auto it = std::find(class_names_.begin(), class_names_.end(), label);
  return it == class_names_.end() ? -1 : static_cast<int>(it - class_names_.begin());
}

void validate_record(const LabelSpace& space, const ExampleRecord& r, std::size_t row) {
  if (r.id.empty()) throw ValidationError(row, "empty id");
  if (has_csv_metachar(r.id)) throw ValidationError(row, "id contains a CSV metacharacter");
  if (r.logits.size() != space.n_classes())
    throw ValidationError(row, "dimension mismatch: " + std::to_string(r.logits.size()) +
                                   " logits, manifest n_classes = " +
                                   std::to_string(space.n_classes()));
  if (r.features.size() != space.feature_dim())
    throw ValidationError(row, "dimension mismatch: " + std::to_string(r.features.size()) +
                                   " features, manifest feature_dim = " +
                                   std::to_string(space.feature_dim()));
  for (double v : r.logits)
    if (!std::isfinite(v)) throw ValidationError(row, "non-finite logit");
  for (double v : r.features)
    if (!std::isfinite(v)) throw ValidationError(row, "non-finite feature");
  if (r.is_unknown()) {
    if (r.split != Split::Test)
      throw ValidationError(row, "label " + std::string(kUnknownLabel) +
                                     " is only allowed in the test split; unknown-class "
                                     "examples must be removed from train and val");
  } else if (!space.contains(r.gold_label)) {
    throw ValidationError(row, "gold label '" + r.gold_label + "' is not in the label space");
  }
}

DatasetBundle::DatasetBundle(LabelSpace label_space, std::vector<ExampleRecord> records,
                             bool requires_reexport)
    : label_space_(std::move(label_space)),
      records_(std::move(records)),
      requires_reexport_(requires_reexport) {
  std::unordered_set<std::string_view> ids;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    validate_record(label_space_, r, i + 1);
    if (!ids.insert(r.id).second) throw ValidationError(i + 1, "duplicate id '" + r.id + "'");
  }
}

std::vector<const ExampleRecord*> DatasetBundle::split(Split which) const {
  std::vector<const ExampleRecord*> out;
  for (const auto& r : records_)
    if (r.split == which) out.push_back(&r);
  return out;
}

std::vector<std::size_t> DatasetBundle::class_counts(Split which) const {
  std::vector<std::size_t> counts(label_space_.n_classes(), 0);
  for (const auto& r : records_)
    if (r.split == which && !r.is_unknown())
      ++counts[static_cast<std::size_t>(label_space_.index_of(r.gold_label))];
  return counts;
}

std::size_t DatasetBundle::gold_index(const ExampleRecord& record) const {
  const int idx = label_space_.index_of(record.gold_label);
  if (idx < 0) throw PreconditionError("record '" + record.id + "' has no known gold class");
  return static_cast<std::size_t>(idx);
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec == std::errc::result_out_of_range) {
    // from_chars reports subnormals as out of range; fall back to strtod,
    // which returns the correctly rounded value.
    const std::string copy(text);
    char* end = nullptr;
    v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size())
      throw ValidationError("invalid number '" + copy + "'");
    return v;
  }
  if (res.ec != std::errc() || res.ptr != last || text.empty())
    throw ValidationError("invalid number '" + std::string(text) + "'");
  return v;
}

DatasetBundle load_bundle(const std::filesystem::path& manifest_path,
                          const std::filesystem::path& records_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw ValidationError("cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + manifest_path.string() + ": " + e.what());
  }

  LabelSpace space;
  bool requires_reexport = false;
  try {
    const auto n = manifest.at("n_classes").get<std::size_t>();
    const auto d = manifest.at("feature_dim").get<std::size_t>();
    auto names = manifest.at("class_names").get<std::vector<std::string>>();
    if (names.size() != n)
      throw ValidationError("manifest n_classes = " + std::to_string(n) + " but " +
                            std::to_string(names.size()) + " class_names given");
    if (manifest.contains("unknown_label") &&
        manifest["unknown_label"].get<std::string>() != kUnknownLabel)
      throw ValidationError("manifest unknown_label must be " + std::string(kUnknownLabel));
    requires_reexport = manifest.value("requires_reexport", false);
    space = LabelSpace(std::move(names), d);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + manifest_path.string() + ": " + e.what());
  }

  std::ifstream rf(records_path, std::ios::binary);
  if (!rf) throw ValidationError("cannot open records " + records_path.string());

  std::string line;
  if (!std::getline(rf, line)) throw ValidationError("records file is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header(space))
    throw ValidationError("records header does not match manifest dimensions; expected '" +
                            expected_header(space) + "'");

  const std::size_t n = space.n_classes();
  const std::size_t d = space.feature_dim();
  std::vector<ExampleRecord> records;
  std::size_t row = 0;
  while (std::getline(rf, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3 + n + d)
      throw ValidationError(row, "dimension mismatch: expected " + std::to_string(3 + n + d) +
                                     " columns (" + std::to_string(n) + " logits, " +
                                     std::to_string(d) + " features), got " +
                                     std::to_string(fields.size()));
    ExampleRecord r;
    r.id = std::string(fields[0]);
    try {
      r.split = parse_split(fields[1]);
      r.gold_label = std::string(fields[2]);
      r.logits.reserve(n);
      r.features.reserve(d);
      for (std::size_t i = 0; i < n; ++i) r.logits.push_back(parse_real(fields[3 + i]));
      for (std::size_t i = 0; i < d; ++i) r.features.push_back(parse_real(fields[3 + n + i]));
    } catch (const ValidationError& e) {
      throw ValidationError(row, e.what());
    }
    records.push_back(std::move(r));
  }
  return DatasetBundle(std::move(space), std::move(records), requires_reexport);
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& records_path) {
  const auto& space = bundle.label_space();
  json manifest = {{"n_classes", space.n_classes()},
                   {"feature_dim", space.feature_dim()},
                   {"class_names", space.class_names()},
                   {"unknown_label", std::string(kUnknownLabel)}};
  if (bundle.requires_reexport()) manifest["requires_reexport"] = true;

  std::ofstream mf(manifest_path);
  if (!mf) throw Error("cannot write manifest " + manifest_path.string());
  mf << manifest.dump(2) << '\n';
  if (!mf) throw Error("failed writing " + manifest_path.string());

  std::ofstream rf(records_path, std::ios::binary);
  if (!rf) throw Error("cannot write records " + records_path.string());
  std::string buf = expected_header(space);
  buf += '\n';
  for (const auto& r : bundle.records()) {
    buf += r.id;
    buf += ',';
    buf += to_string(r.split);
    buf += ',';
    buf += r.gold_label;
    for (double v : r.logits) (buf += ',') += format_real(v);
    for (double v : r.features) (buf += ',') += format_real(v);
    buf += '\n';
  }
  rf << buf;
  if (!rf) throw Error("failed writing " + records_path.string());
}

}  // namespace smdn
