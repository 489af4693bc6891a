#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tspn/cli/config.hpp"
#include "tspn/cli/manifest.hpp"
#include "tspn/learn/objective.hpp"
#include "tspn/structure/confusion.hpp"

namespace tspn::cli {

/// Failure that maps to exit code 1; the message is printed as is.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureSet {
  Manifest manifest;
  std::vector<int> folds;
  std::vector<Sample> samples;  // one per manifest row
  std::filesystem::path codebook;
  std::size_t encoded = 0;
  std::size_t cache_hits = 0;
  bool codebook_reused = false;
};

/// squarify, (augment), filter, codebook on the rows outside `test_fold`
/// (all rows for -1), encode every row. Codebook and caches live under
/// `root`/features and are keyed by content hashes, so unchanged inputs are
/// never recomputed.
FeatureSet run_features(const RunConfig& config, int test_fold, const std::filesystem::path& root,
                        std::ostream& log);

/// Preprocessing shared by the pipeline and the filter preview.
ImageBuffer preprocess(const ImageBuffer& img, const RunConfig& config);

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<ClassStats> classes;
  std::vector<std::string> names;
};

EvalReport make_report(const ConfusionMatrix& cm, std::vector<std::string> names);
void write_report(const std::filesystem::path& dir, const EvalReport& report);
void print_report(std::ostream& os, const EvalReport& report);

/// "92.75% (±3.69%)": mean and sample standard deviation, in percent.
std::string mean_sd_line(const std::vector<double>& accuracies);

int cmd_features(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_crossval(const RunConfig& config, std::ostream& log);
int cmd_confusion(const RunConfig& config, std::ostream& log);
int cmd_filter(const RunConfig& config, const std::filesystem::path& input, const std::filesystem::path& output,
               std::ostream& log);

/// Writes <out>/config.txt with every resolved key.
void echo_config(const RunConfig& config);

}  // namespace tspn::cli
