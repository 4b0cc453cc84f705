#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smdn {

inline constexpr std::string_view kUnknownLabel = "__unknown__";

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// Ordered set of known class names plus the dimensions of the exported
/// classifier outputs.
class LabelSpace {
public:
  LabelSpace() = default;
  /// Throws ValidationError on duplicate, empty or reserved names, fewer than
  /// two classes, or feature_dim == 0.
  LabelSpace(std::vector<std::string> class_names, std::size_t feature_dim);

  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t n_classes() const { return class_names_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::string_view unknown_label() const { return kUnknownLabel; }

  /// Index of a known class, or -1 if the label is not in the space.
  int index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label) >= 0; }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

private:
  std::vector<std::string> class_names_;
  std::size_t feature_dim_ = 0;
};

/// One utterance's exported classifier outputs.
struct ExampleRecord {
  std::string id;
  Split split = Split::Train;
  std::string gold_label;
  std::vector<double> logits;
  std::vector<double> features;

  bool is_unknown() const { return gold_label == kUnknownLabel; }

  friend bool operator==(const ExampleRecord&, const ExampleRecord&) = default;
};

/// A validated collection of records sharing one LabelSpace.
///
/// `requires_reexport` is set when the records were restricted to a known
/// class subset without re-exporting the classifier: the logits still span
/// the original label space and the bundle cannot feed model fitting.
class DatasetBundle {
public:
  DatasetBundle() = default;
  /// Validates every record; throws ValidationError naming the 1-based row.
  DatasetBundle(LabelSpace label_space, std::vector<ExampleRecord> records,
                bool requires_reexport = false);

  const LabelSpace& label_space() const { return label_space_; }
  const std::vector<ExampleRecord>& records() const { return records_; }
  bool requires_reexport() const { return requires_reexport_; }

  /// Records of one split, in file order.
  std::vector<const ExampleRecord*> split(Split which) const;
  /// Per-class record counts over one split (unknown records are skipped).
  std::vector<std::size_t> class_counts(Split which) const;
  /// Gold class index of a known record; throws for unknown records.
  std::size_t gold_index(const ExampleRecord& record) const;

  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;

private:
  LabelSpace label_space_;
  std::vector<ExampleRecord> records_;
  bool requires_reexport_ = false;
};

/// Checks one record against a label space. `row` is used in diagnostics.
void validate_record(const LabelSpace& space, const ExampleRecord& record,
                     std::size_t row);

DatasetBundle load_bundle(const std::filesystem::path& manifest_path,
                          const std::filesystem::path& records_path);

void save_bundle(const DatasetBundle& bundle,
                 const std::filesystem::path& manifest_path,
                 const std::filesystem::path& records_path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);
/// Strict decimal parse; throws ValidationError on trailing junk.
double parse_real(std::string_view text);

}  // namespace smdn
