#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "tspn/cli/commands.hpp"

namespace {

using tspn::cli::KeyValues;

struct Common {
  std::string config;
  KeyValues flags;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file");
  auto flag = [cmd, &c](const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        name, [&c, key](const std::string& v) { c.flags[key] = v; }, help);
  };
  flag("--manifest", "manifest", "CSV path,label[,fold]");
  flag("--out", "out", "output directory");
  flag("--seed", "seed", "seed for every random stage");
  flag("--variant", "variant", "spn | spn_mm | tspn | tspn_mm");
  flag("--reg", "reg", "on | off");
  flag("--subset-size", "subset_size", "confused subset size, or auto");
  flag("--folds", "folds", "fold count when the manifest has no fold column");
  flag("--fold", "fold", "held-out fold, -1 for none");
  flag("--model", "model", "model file (default <out>/model.spn)");
  flag("--dataset", "dataset", "preset: generic | hep2 | feulgen");
  cmd->add_option("--set", c.sets, "extra key=value, repeatable");
}

tspn::cli::RunConfig resolve(const Common& c) {
  std::vector<KeyValues> layers;
  if (!c.config.empty()) layers.push_back(tspn::cli::read_key_values(c.config));
  KeyValues extra;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw tspn::cli::ConfigError("--set expects key=value, got '" + s + "'");
    const auto kv = tspn::cli::parse_key_values(s, "--set");
    extra.insert(kv.begin(), kv.end());
  }
  layers.push_back(extra);
  layers.push_back(c.flags);
  return tspn::cli::resolve(layers);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"t-SPN image classification: features, training, evaluation"};
  app.require_subcommand(1);

  Common common;
  std::string input;
  std::string output = "filtered.png";
  auto* features = app.add_subcommand("features", "build the codebook and feature caches");
  auto* train = app.add_subcommand("train", "train one variant");
  auto* eval = app.add_subcommand("eval", "evaluate a model on a fold or the whole manifest");
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  auto* confusion = app.add_subcommand("confusion", "confusion counts and the most confused classes");
  auto* filter = app.add_subcommand("filter", "filter a single image for preview");
  for (auto* cmd : {features, train, eval, crossval, confusion, filter}) add_common(cmd, common);
  filter->add_option("--input", input, "image to filter")->required();
  filter->add_option("--output", output, "output file under --out (.png or .pgm/.ppm)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve(common);
    if (!filter->parsed() && config.manifest.empty()) {
      std::cerr << "error: no manifest (use --manifest or manifest = ... in the config)\n";
      return 1;
    }
    if (features->parsed()) return tspn::cli::cmd_features(config, std::cout);
    if (train->parsed()) return tspn::cli::cmd_train(config, std::cout);
    if (eval->parsed()) return tspn::cli::cmd_eval(config, std::cout);
    if (crossval->parsed()) return tspn::cli::cmd_crossval(config, std::cout);
    if (confusion->parsed()) return tspn::cli::cmd_confusion(config, std::cout);
    if (filter->parsed()) return tspn::cli::cmd_filter(config, input, output, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
