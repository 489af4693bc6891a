#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tspn::cli {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestRow {
  std::filesystem::path path;  // resolved against the manifest's directory
  std::string label;
  std::uint32_t label_index = 0;
  int fold = -1;  // -1 when the column is empty or absent
};

struct Manifest {
  std::filesystem::path source;
  std::vector<ManifestRow> rows;
  std::vector<std::string> classes;  // sorted; label_index points here

  bool has_folds() const;
};

/// CSV `path,label[,fold]` with an optional header line starting with `path`.
Manifest read_manifest(const std::filesystem::path& path);

/// Seeded stratified assignment of `folds` folds. Each class is shuffled and
/// dealt round robin, continuing where the previous class stopped, so every
/// class lands within one sample of proportional in each fold. Errors when a
/// class has fewer samples than folds.
std::vector<int> stratified_folds(const std::vector<std::uint32_t>& labels, std::uint32_t classes,
                                  std::uint32_t folds, std::uint64_t seed);

/// The manifest's own fold column when every row has one, otherwise
/// stratified_folds.
std::vector<int> resolve_folds(const Manifest& manifest, std::uint32_t folds, std::uint64_t seed);

void write_folds_csv(const std::filesystem::path& path, const Manifest& manifest, const std::vector<int>& folds);

}  // namespace tspn::cli
