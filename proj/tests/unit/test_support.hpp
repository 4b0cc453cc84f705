#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "smdn/data_model.hpp"
#include "smdn/random.hpp"

namespace test_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("smdn-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random valid bundle; test split may contain unknown records.
inline smdn::DatasetBundle random_bundle(smdn::Rng& rng, std::size_t n_classes, std::size_t dim,
                                         std::size_t n_records) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_classes; ++c) names.push_back("c" + std::to_string(c));
  std::vector<smdn::ExampleRecord> records;
  for (std::size_t i = 0; i < n_records; ++i) {
    smdn::ExampleRecord r;
    r.id = "id" + std::to_string(i);
    r.split = static_cast<smdn::Split>(rng.next() % 3);
    const auto label = rng.next() % (n_classes + 1);
    r.gold_label = (label == n_classes && r.split == smdn::Split::Test)
                       ? std::string(smdn::kUnknownLabel)
                       : names[label % n_classes];
    for (std::size_t c = 0; c < n_classes; ++c)
      r.logits.push_back(rng.normal() * std::pow(10.0, rng.uniform(-300.0, 300.0)));
    for (std::size_t d = 0; d < dim; ++d) r.features.push_back(rng.normal(0.0, 3.0));
    records.push_back(std::move(r));
  }
  return {smdn::LabelSpace(names, dim), std::move(records)};
}

}  // namespace test_support
