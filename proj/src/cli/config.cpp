#include "tspn/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) throw ConfigError(key + ": not an integer: '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected on or off, got '" + v + "'");
}

const char* onoff(bool b) { return b ? "on" : "off"; }

std::string channel_name(int c) {
  if (c == -1) return "all";
  if (c == -2) return "gray";
  return std::to_string(c);
}

int parse_channel(const std::string& key, const std::string& v) {
  if (v == "all") return -1;
  if (v == "gray") return -2;
  if (v == "red") return 0;
  if (v == "green") return 1;
  if (v == "blue") return 2;
  const int c = parse_int<int>(key, v);
  if (c < 0) throw ConfigError(key + ": channel must be all, gray or an index");
  return c;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TSPN_U32(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_int<std::uint32_t>(#field, v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }
#define TSPN_REAL(key, field)                                                        \
  [](RunConfig& c, const std::string& v) { c.field = parse_real(key, v); }, \
      [](const RunConfig& c) { return fmt(c.field); }
#define TSPN_BOOL(key, field)                                                         \
  [](RunConfig& c, const std::string& v) { c.field = parse_bool(key, v); }, \
      [](const RunConfig& c) { return std::string(onoff(c.field)); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"dataset", [](RunConfig& c, const std::string& v) { c.dataset = parse_dataset(v); },
       [](const RunConfig& c) { return std::string(to_string(c.dataset)); }},
      {"manifest", [](RunConfig& c, const std::string& v) { c.manifest = v; },
       [](const RunConfig& c) { return c.manifest.string(); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }, [](const RunConfig& c) { return c.out.string(); }},
      {"model", [](RunConfig& c, const std::string& v) { c.model = v; },
       [](const RunConfig& c) { return c.model.string(); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_int<std::uint64_t>("seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"variant", [](RunConfig& c, const std::string& v) {
         try {
           c.variant = parse_variant(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("variant: ") + e.what());
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.variant)); }},
      {"reg", TSPN_BOOL("reg", reg)},
      {"beta", TSPN_REAL("beta", beta)},
      {"subset_size",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.subset_size.reset();
         } else {
           c.subset_size = parse_int<std::uint32_t>("subset_size", v);
         }
       },
       [](const RunConfig& c) { return c.subset_size ? std::to_string(*c.subset_size) : std::string("auto"); }},
      {"holdout", TSPN_REAL("holdout", holdout)},
      {"folds", TSPN_U32(folds)},
      {"fold", [](RunConfig& c, const std::string& v) { c.fold = parse_int<int>("fold", v); },
       [](const RunConfig& c) { return std::to_string(c.fold); }},
      {"parts", TSPN_U32(parts)},
      {"components", TSPN_U32(components)},
      {"grid", TSPN_U32(grid)},
      {"template_scale", TSPN_REAL("template_scale", template_scale)},
      {"channel", [](RunConfig& c, const std::string& v) { c.channel = parse_channel("channel", v); },
       [](const RunConfig& c) { return channel_name(c.channel); }},
      {"resize", TSPN_U32(resize)},
      {"augment", TSPN_BOOL("augment", augment)},
      {"augment_step", TSPN_REAL("augment_step", augment_step)},
      {"filter",
       [](RunConfig& c, const std::string& v) {
         try {
           c.filter.kind = parse_filter_kind(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("filter: ") + e.what());
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.filter.kind)); }},
      {"d0", TSPN_REAL("d0", filter.d0)},
      {"gain_low", TSPN_REAL("gain_low", filter.gain_low)},
      {"gain_high", TSPN_REAL("gain_high", filter.gain_high)},
      {"sigma", TSPN_REAL("sigma", filter.sigma)},
      {"mask", [](RunConfig& c, const std::string& v) { c.filter.mask = parse_int<int>("mask", v); },
       [](const RunConfig& c) { return std::to_string(c.filter.mask); }},
      {"k", [](RunConfig& c, const std::string& v) { c.codebook.k = parse_int<std::uint32_t>("k", v); },
       [](const RunConfig& c) { return std::to_string(c.codebook.k); }},
      {"patches",
       [](RunConfig& c, const std::string& v) { c.codebook.patches = parse_int<std::size_t>("patches", v); },
       [](const RunConfig& c) { return std::to_string(c.codebook.patches); }},
      {"patch_side",
       [](RunConfig& c, const std::string& v) { c.codebook.patch_side = parse_int<std::uint32_t>("patch_side", v); },
       [](const RunConfig& c) { return std::to_string(c.codebook.patch_side); }},
      {"kmeans_rounds",
       [](RunConfig& c, const std::string& v) { c.codebook.rounds = parse_int<std::uint32_t>("kmeans_rounds", v); },
       [](const RunConfig& c) { return std::to_string(c.codebook.rounds); }},
      {"zca_epsilon", TSPN_REAL("zca_epsilon", codebook.epsilon)},
      {"variance_floor", TSPN_REAL("variance_floor", codebook.variance_floor)},
      {"alpha", TSPN_REAL("alpha", training.alpha)},
      {"decay", TSPN_BOOL("decay", training.decay)},
      {"eta", TSPN_REAL("eta", training.eta)},
      {"lambda", TSPN_REAL("lambda", training.lambda)},
      {"epochs",
       [](RunConfig& c, const std::string& v) { c.training.epochs = parse_int<std::uint32_t>("epochs", v); },
       [](const RunConfig& c) { return std::to_string(c.training.epochs); }},
      {"inference",
       [](RunConfig& c, const std::string& v) {
         try {
           c.training.inference = parse_inference(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("inference: ") + e.what());
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.training.inference)); }},
      {"learn_templates", TSPN_BOOL("learn_templates", training.learn_templates)},
      {"staged_margin", TSPN_BOOL("staged_margin", training.staged_margin)},
      {"weight_floor", TSPN_REAL("weight_floor", training.weight_floor)},
  };
  return table;
}

#undef TSPN_U32
#undef TSPN_REAL
#undef TSPN_BOOL

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

void apply_preset(RunConfig& c) {
  switch (c.dataset) {
    case Dataset::Generic:
      break;
    case Dataset::Hep2:
      c.channel = 1;
      c.resize = 96;
      c.augment = true;
      c.filter.kind = FilterKind::IdealHpf;
      c.beta = 0.015;
      c.subset_size = 3;
      break;
    case Dataset::Feulgen:
      c.channel = -1;
      c.resize = 80;
      c.filter.kind = FilterKind::Log;
      c.beta = 0.010;
      c.subset_size = 2;
      break;
  }
}

}  // namespace

const char* to_string(Dataset d) {
  switch (d) {
    case Dataset::Generic: return "generic";
    case Dataset::Hep2: return "hep2";
    case Dataset::Feulgen: return "feulgen";
  }
  return "?";
}

Dataset parse_dataset(const std::string& name) {
  if (name == "generic") return Dataset::Generic;
  if (name == "hep2") return Dataset::Hep2;
  if (name == "feulgen") return Dataset::Feulgen;
  throw ConfigError("unknown dataset preset '" + name + "' (generic, hep2, feulgen)");
}

ArchitectureSpec RunConfig::architecture(std::uint32_t classes) const {
  ArchitectureSpec a;
  a.classes = classes;
  a.parts = parts;
  a.components = components;
  a.grid = grid;
  a.depth = codebook.k;
  a.seed = seed;
  a.template_scale = template_scale;
  return a;
}

PipelineConfig RunConfig::pipeline(std::uint32_t classes) const {
  PipelineConfig p;
  p.arch = architecture(classes);
  p.training = training;
  p.training.seed = seed;
  p.training.beta = reg ? beta : 0.0;
  p.subset_size = subset_size;
  p.holdout = holdout;
  return p;
}

CodebookConfig RunConfig::codebook_config() const {
  CodebookConfig c = codebook;
  c.seed = seed;
  return c;
}

std::filesystem::path RunConfig::model_path() const { return model.empty() ? out / "model.spn" : model; }

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (find_key(key) == nullptr) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_key_values(read_file(path), path.string());
}

RunConfig resolve(const std::vector<KeyValues>& layers) {
  KeyValues merged;
  for (const auto& layer : layers) {
    for (const auto& [k, v] : layer) {
      if (find_key(k) == nullptr) throw ConfigError("unknown key '" + k + "'");
      merged[k] = v;
    }
  }
  RunConfig c;
  if (auto it = merged.find("dataset"); it != merged.end()) c.dataset = parse_dataset(it->second);
  apply_preset(c);
  for (const auto& k : keys()) {
    if (auto it = merged.find(k.name); it != merged.end()) k.set(c, it->second);
  }
  try {
    c.filter.validate();
    c.training.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.beta < 0.0) throw ConfigError("beta must be non-negative");
  if (c.folds < 2) throw ConfigError("folds must be at least 2");
  if (!(c.holdout > 0.0 && c.holdout < 1.0)) throw ConfigError("holdout must lie in (0, 1)");
  if (c.augment && !(c.augment_step > 0.0)) throw ConfigError("augment_step must be positive");
  return c;
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) {
    out += k.name;
    out += " = ";
    out += k.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const auto& k : keys()) names.emplace_back(k.name);
  return names;
}

}  // namespace tspn::cli
