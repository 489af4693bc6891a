#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tspn/features/codebook.hpp"
#include "tspn/features/filter.hpp"
#include "tspn/structure/pipeline.hpp"

namespace tspn::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Dataset { Generic, Hep2, Feulgen };

const char* to_string(Dataset d);
Dataset parse_dataset(const std::string& name);  // generic | hep2 | feulgen

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  std::filesystem::path model;  // empty: <out>/model.spn
  std::uint64_t seed = 0;
  Dataset dataset = Dataset::Generic;

  Variant variant = Variant::TspnMm;
  bool reg = true;
  double beta = 0.015;  // used when reg is on
  std::optional<std::uint32_t> subset_size;
  double holdout = 0.2;

  std::uint32_t folds = 10;
  int fold = -1;  // held-out fold for train / eval, -1 for none

  // Architecture; the class count comes from the manifest.
  std::uint32_t parts = 10;
  std::uint32_t components = 25;
  std::uint32_t grid = 8;
  double template_scale = 0.1;

  // Preprocessing and features.
  int channel = -1;  // -1 all channels, -2 gray, else that channel
  std::uint32_t resize = 0;
  bool augment = false;
  double augment_step = 10.0;
  FilterSpec filter;
  CodebookConfig codebook;

  TrainingConfig training;

  /// Architecture, training and codebook settings with seeds and beta folded in.
  ArchitectureSpec architecture(std::uint32_t classes) const;
  PipelineConfig pipeline(std::uint32_t classes) const;
  CodebookConfig codebook_config() const;
  std::filesystem::path model_path() const;
};

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines, `#` starts a comment. Unknown keys are errors.
KeyValues parse_key_values(const std::string& text, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);

/// Defaults, then the preset named by `dataset`, then every key. Later maps
/// win over earlier ones.
RunConfig resolve(const std::vector<KeyValues>& layers);

/// Every key in a fixed order; resolve({parse_key_values(to_text(c))}) == c.
std::string to_text(const RunConfig& config);
std::vector<std::string> config_keys();

}  // namespace tspn::cli
