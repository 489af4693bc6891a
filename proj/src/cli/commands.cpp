#include "tspn/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "tspn/features/image_io.hpp"
#include "tspn/spn/serialize.hpp"
#include "tspn/util/atomic_file.hpp"

namespace tspn::cli {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<Sample> select(const FeatureSet& fs, int fold, bool inside) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < fs.samples.size(); ++i) {
    if ((fs.folds[i] == fold) == inside) out.push_back(fs.samples[i]);
  }
  return out;
}

/// Evaluation rows: everything for fold -1, else that fold.
std::vector<Sample> eval_rows(const FeatureSet& fs, int fold) {
  if (fold < 0) return fs.samples;
  auto rows = select(fs, fold, true);
  if (rows.empty()) throw CommandError("fold " + std::to_string(fold) + " is empty");
  return rows;
}

SpnGraph load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CommandError("model not found: " + path.string());
  try {
    return load_graph(path);
  } catch (const std::exception& e) {
    throw CommandError(path.string() + ": " + e.what());
  }
}

void check_labels(const SpnGraph& model, const FeatureSet& fs) {
  if (fs.manifest.classes.size() > model.label_count()) {
    throw CommandError("label '" + fs.manifest.classes[model.label_count()] + "' is outside the model's " +
                       std::to_string(model.label_count()) + " classes");
  }
}

SpnGraph train_fold(const RunConfig& config, const FeatureSet& fs, std::ostream& log) {
  const auto data = config.fold < 0 ? fs.samples : select(fs, config.fold, false);
  if (data.empty()) throw CommandError("no training samples");
  const auto classes = static_cast<std::uint32_t>(fs.manifest.classes.size());
  if (classes < 2) throw CommandError("need at least two classes, the manifest has " + std::to_string(classes));
  const PipelineConfig pc = config.pipeline(classes);
  log << "train: " << to_string(config.variant) << " on " << data.size() << " samples, beta = " << pc.training.beta
      << "\n";
  PipelineResult res;
  try {
    res = run_variant(config.variant, data, pc, [&log](const EpochMetrics& m) {
      log << "  epoch " << m.epoch << "  objective " << fmt("%.6g", m.objective) << "  accuracy "
          << fmt("%.4f", m.train_accuracy) << "\n";
    });
  } catch (const TrainingDiverged& e) {
    throw CommandError(std::string("training diverged: ") + e.what());
  }
  for (const auto& note : res.notes) log << "warning: " << note << "\n";
  std::filesystem::create_directories(config.out);
  save_graph(config.model_path(), res.model);
  std::ostringstream metrics;
  write_metrics_csv(metrics, res.metrics);
  write_file_atomic(config.out / "metrics.csv", metrics.str());
  if (res.preliminary) {
    std::ostringstream cm;
    write_confusion_csv(cm, *res.preliminary, fs.manifest.classes);
    write_file_atomic(config.out / "confusion_preliminary.csv", cm.str());
  }
  if (res.subset) {
    write_file_atomic(config.out / "subset.txt", subset_record(*res.subset) + "\n");
    std::string names;
    for (auto c : res.subset->classes) names += (names.empty() ? "" : ", ") + fs.manifest.classes[c];
    log << "confused subset: " << names << "\n";
  }
  log << "final train accuracy: " << fmt("%.6f", res.metrics.back().train_accuracy) << "\n";
  log << "model: " << config.model_path().string() << "\n";
  return res.model;
}

EvalReport eval_model(const RunConfig& config, const SpnGraph& model, const FeatureSet& fs, int fold) {
  check_labels(model, fs);
  const auto rows = eval_rows(fs, fold);
  return make_report(confusion(model, rows, config.training.inference), fs.manifest.classes);
}

void write_percent_confusion(const std::filesystem::path& path, const EvalReport& r) {
  std::string out = "true\\predicted";
  for (const auto& n : r.names) out += "," + n;
  out += "\n";
  const auto& cm = r.confusion;
  for (std::uint32_t t = 0; t < cm.classes(); ++t) {
    out += t < r.names.size() ? r.names[t] : std::to_string(t);
    const double row = static_cast<double>(cm.row_total(t));
    for (std::uint32_t p = 0; p < cm.classes(); ++p) {
      out += "," + fmt("%.2f", row > 0 ? 100.0 * static_cast<double>(cm.counts[t][p]) / row : 0.0);
    }
    out += "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace

void echo_config(const RunConfig& config) { write_file_atomic(config.out / "config.txt", to_text(config)); }

EvalReport make_report(const ConfusionMatrix& cm, std::vector<std::string> names) {
  EvalReport r;
  r.confusion = cm;
  r.names = std::move(names);
  r.accuracy = cm.accuracy();
  for (std::uint32_t c = 0; c < cm.classes(); ++c) {
    ClassStats s;
    s.support = cm.row_total(c);
    std::uint64_t predicted = 0;
    for (std::uint32_t t = 0; t < cm.classes(); ++t) predicted += cm.counts[t][c];
    const double hit = static_cast<double>(cm.counts[c][c]);
    s.precision = predicted > 0 ? hit / static_cast<double>(predicted) : 0.0;
    s.recall = s.support > 0 ? hit / static_cast<double>(s.support) : 0.0;
    r.classes.push_back(s);
  }
  return r;
}

void write_report(const std::filesystem::path& dir, const EvalReport& r) {
  std::string out = "class,precision,recall,support\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& s = r.classes[c];
    out += r.names[c] + "," + fmt("%.17g", s.precision) + "," + fmt("%.17g", s.recall) + "," +
           std::to_string(s.support) + "\n";
  }
  out += "accuracy," + fmt("%.17g", r.accuracy) + ",," + std::to_string(r.confusion.total()) + "\n";
  write_file_atomic(dir / "report.csv", out);
  write_percent_confusion(dir / "confusion.csv", r);
}

void print_report(std::ostream& os, const EvalReport& r) {
  std::size_t w = 9;
  for (const auto& n : r.names) w = std::max(w, n.size() + 1);
  os << "accuracy: " << fmt("%.2f", 100.0 * r.accuracy) << "% (" << r.confusion.total() << " samples)\n";
  os << std::left << std::setw(static_cast<int>(w)) << "class" << std::right << std::setw(10) << "precision"
     << std::setw(10) << "recall" << std::setw(9) << "support\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    os << std::left << std::setw(static_cast<int>(w)) << r.names[c] << std::right << std::setw(10)
       << fmt("%.3f", r.classes[c].precision) << std::setw(10) << fmt("%.3f", r.classes[c].recall) << std::setw(8)
       << r.classes[c].support << "\n";
  }
  os << "\nconfusion (% of true class, rows true, columns predicted)\n";
  os << std::left << std::setw(static_cast<int>(w)) << "";
  for (const auto& n : r.names) os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(8, n.size() + 1))) << n;
  os << "\n";
  for (std::uint32_t t = 0; t < r.confusion.classes(); ++t) {
    os << std::left << std::setw(static_cast<int>(w)) << r.names[t];
    const double row = static_cast<double>(r.confusion.row_total(t));
    for (std::uint32_t p = 0; p < r.confusion.classes(); ++p) {
      const double v = row > 0 ? 100.0 * static_cast<double>(r.confusion.counts[t][p]) / row : 0.0;
      os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(8, r.names[p].size() + 1)))
         << fmt("%.2f", v);
    }
    os << "\n";
  }
}

std::string mean_sd_line(const std::vector<double>& acc) {
  if (acc.empty()) throw std::invalid_argument("no accuracies");
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= static_cast<double>(acc.size());
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  const double sd = acc.size() > 1 ? std::sqrt(ss / static_cast<double>(acc.size() - 1)) : 0.0;
  return fmt("%.2f", 100.0 * mean) + "% (±" + fmt("%.2f", 100.0 * sd) + "%)";
}

int cmd_features(const RunConfig& config, std::ostream& log) {
  echo_config(config);
  run_features(config, config.fold, config.out, log);
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  echo_config(config);
  const FeatureSet fs = run_features(config, config.fold, config.out, log);
  train_fold(config, fs, log);
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  echo_config(config);
  const SpnGraph model = load_model(config.model_path());
  const FeatureSet fs = run_features(config, config.fold, config.out, log);
  const EvalReport r = eval_model(config, model, fs, config.fold);
  write_report(config.out, r);
  print_report(log, r);
  return 0;
}

int cmd_crossval(const RunConfig& config, std::ostream& log) {
  echo_config(config);
  Manifest m;
  std::vector<int> folds;
  try {
    m = read_manifest(config.manifest);
    folds = resolve_folds(m, config.folds, config.seed);
  } catch (const ManifestError& e) {
    throw CommandError(e.what());
  }
  const std::set<int> ids(folds.begin(), folds.end());
  if (ids.size() < 2) throw CommandError("cross-validation needs at least two folds");
  std::vector<double> acc;
  ConfusionMatrix total = ConfusionMatrix::zeros(static_cast<std::uint32_t>(m.classes.size()));
  std::string table = "fold,accuracy,samples\n";
  for (int f : ids) {
    RunConfig sub = config;
    sub.fold = f;
    sub.out = config.out / ("fold" + std::to_string(f));
    sub.model.clear();
    log << "== fold " << f << "\n";
    const FeatureSet fs = run_features(sub, f, config.out, log);
    const SpnGraph model = train_fold(sub, fs, log);
    const EvalReport r = eval_model(sub, model, fs, f);
    write_report(sub.out, r);
    log << "fold " << f << " test accuracy: " << fmt("%.2f", 100.0 * r.accuracy) << "%\n";
    acc.push_back(r.accuracy);
    for (std::uint32_t t = 0; t < total.classes(); ++t) {
      for (std::uint32_t p = 0; p < total.classes(); ++p) total.counts[t][p] += r.confusion.counts[t][p];
    }
    table += std::to_string(f) + "," + fmt("%.17g", r.accuracy) + "," + std::to_string(r.confusion.total()) + "\n";
  }
  const std::string line = mean_sd_line(acc);
  table += "mean," + line + ",\n";
  write_file_atomic(config.out / "crossval.csv", table);
  const EvalReport pooled = make_report(total, m.classes);
  write_percent_confusion(config.out / "confusion.csv", pooled);
  print_report(log, pooled);
  log << "\n" << ids.size() << "-fold accuracy: " << line << "\n";
  return 0;
}

int cmd_confusion(const RunConfig& config, std::ostream& log) {
  echo_config(config);
  const SpnGraph model = load_model(config.model_path());
  const FeatureSet fs = run_features(config, config.fold, config.out, log);
  check_labels(model, fs);
  const ConfusionMatrix cm = confusion(model, eval_rows(fs, config.fold), config.training.inference);
  std::ostringstream csv;
  write_confusion_csv(csv, cm, fs.manifest.classes);
  write_file_atomic(config.out / "confusion_counts.csv", csv.str());
  log << csv.str();
  try {
    const std::uint32_t size = config.subset_size ? *config.subset_size : default_subset_size(cm);
    const ConfusionSubset s = select_confused(cm, size);
    write_file_atomic(config.out / "subset.txt", subset_record(s) + "\n");
    log << "most confused: " << subset_record(s) << "\n";
  } catch (const NoConfusion& e) {
    log << "warning: " << e.what() << "\n";
  }
  return 0;
}

int cmd_filter(const RunConfig& config, const std::filesystem::path& input, const std::filesystem::path& output,
               std::ostream& log) {
  if (!std::filesystem::exists(input)) throw CommandError("image not found: " + input.string());
  ImageBuffer img;
  try {
    img = filter_image(preprocess(read_image(input), config), config.filter);
  } catch (const std::exception& e) {
    throw CommandError(input.string() + ": " + e.what());
  }
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& v : img.pixels) v = span > 0 ? (v - a) / span : 0.0;
  const auto dest = output.is_absolute() ? output : config.out / output;
  const auto ext = dest.extension().string();
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(dest, img);
  } else {
    write_png(dest, img);
  }
  log << "filter: " << to_string(config.filter.kind) << " -> " << dest.string() << " (range " << fmt("%.6g", a)
      << " .. " << fmt("%.6g", a + span) << " mapped to [0, 1])\n";
  return 0;
}

}  // namespace tspn::cli
