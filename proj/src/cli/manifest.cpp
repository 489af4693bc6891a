#include "tspn/cli/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tspn/util/atomic_file.hpp"

namespace tspn::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

bool Manifest::has_folds() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ManifestRow& r) { return r.fold >= 0; });
}

Manifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ManifestError("manifest not found: " + path.string());
  Manifest m;
  m.source = path;
  const auto base = path.parent_path();
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (lineno == 1 && !fields.empty() && fields[0] == "path") continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() < 2 || fields.size() > 3) throw ManifestError(where + ": expected path,label[,fold]");
    if (fields[0].empty() || fields[1].empty()) throw ManifestError(where + ": empty path or label");
    ManifestRow row;
    row.path = std::filesystem::path(fields[0]).is_absolute() ? std::filesystem::path(fields[0]) : base / fields[0];
    row.label = fields[1];
    if (fields.size() == 3 && !fields[2].empty()) {
      const auto& f = fields[2];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), row.fold);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || row.fold < 0) {
        throw ManifestError(where + ": bad fold '" + f + "'");
      }
    }
    m.rows.push_back(std::move(row));
  }
  if (m.rows.empty()) throw ManifestError(path.string() + ": no rows");
  std::set<std::string> names;
  for (const auto& r : m.rows) names.insert(r.label);
  m.classes.assign(names.begin(), names.end());
  for (auto& r : m.rows) {
    r.label_index = static_cast<std::uint32_t>(
        std::lower_bound(m.classes.begin(), m.classes.end(), r.label) - m.classes.begin());
  }
  return m;
}

std::vector<int> stratified_folds(const std::vector<std::uint32_t>& labels, std::uint32_t classes,
                                  std::uint32_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least two folds");
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw std::out_of_range("label out of range");
    members[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed ^ 0x666f6c6473ULL);
  std::vector<int> out(labels.size(), -1);
  std::size_t next = 0;
  for (std::uint32_t c = 0; c < classes; ++c) {
    auto& idx = members[c];
    if (idx.empty()) continue;
    if (idx.size() < folds) {
      throw std::invalid_argument("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                  " samples, fewer than the " + std::to_string(folds) + " folds");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) out[i] = static_cast<int>(next++ % folds);
  }
  return out;
}

std::vector<int> resolve_folds(const Manifest& manifest, std::uint32_t folds, std::uint64_t seed) {
  if (manifest.has_folds()) {
    std::vector<int> out;
    for (const auto& r : manifest.rows) out.push_back(r.fold);
    return out;
  }
  std::vector<std::uint32_t> labels;
  for (const auto& r : manifest.rows) labels.push_back(r.label_index);
  std::vector<std::size_t> counts(manifest.classes.size());
  for (auto l : labels) ++counts[l];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < folds) {
      throw ManifestError("class '" + manifest.classes[c] + "' has " + std::to_string(counts[c]) +
                          " samples, fewer than the " + std::to_string(folds) + " folds");
    }
  }
  return stratified_folds(labels, static_cast<std::uint32_t>(manifest.classes.size()), folds, seed);
}

void write_folds_csv(const std::filesystem::path& path, const Manifest& manifest, const std::vector<int>& folds) {
  std::string out = "path,label,fold\n";
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    out += manifest.rows[i].path.string() + "," + manifest.rows[i].label + "," + std::to_string(folds[i]) + "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace tspn::cli
