#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <sstream>

#include "tspn/cli/commands.hpp"
#include "tspn/features/image_io.hpp"
#include "tspn/util/atomic_file.hpp"

namespace tspn::cli {

namespace {

void hash_real(Fnv1a& h, double v) {
  std::uint64_t bits;
  static_assert(sizeof bits == sizeof v);
  std::memcpy(&bits, &v, sizeof v);
  h.update(bits);
}

std::uint64_t preprocess_key(const RunConfig& c) {
  Fnv1a h;
  h.update("pre-v1");
  h.update(static_cast<std::uint64_t>(static_cast<std::int64_t>(c.channel)));
  h.update(std::uint64_t{c.resize});
  h.update(static_cast<std::uint64_t>(c.filter.kind));
  hash_real(h, c.filter.d0);
  hash_real(h, c.filter.gain_low);
  hash_real(h, c.filter.gain_high);
  hash_real(h, c.filter.sigma);
  h.update(static_cast<std::uint64_t>(c.filter.mask));
  return h.digest();
}

std::size_t rotation_count(double step) {
  std::size_t n = 0;
  while (static_cast<double>(n) * step < 360.0) ++n;
  return n;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ImageBuffer preprocess(const ImageBuffer& img, const RunConfig& config) {
  ImageBuffer out;
  if (config.channel == -1) {
    out = img;
  } else if (config.channel == -2) {
    out = to_gray(img);
  } else {
    if (static_cast<std::size_t>(config.channel) >= img.channels) {
      throw ImageError("channel " + std::to_string(config.channel) + " requested from an image with " +
                       std::to_string(img.channels) + " channels");
    }
    out = extract_channel(img, static_cast<std::size_t>(config.channel));
  }
  out = squarify(out);
  if (config.resize > 0 && out.height != config.resize) out = resize_bilinear(out, config.resize, config.resize);
  return out;
}

FeatureSet run_features(const RunConfig& config, int test_fold, const std::filesystem::path& root,
                        std::ostream& log) {
  FeatureSet fs;
  try {
    fs.manifest = read_manifest(config.manifest);
    fs.folds = resolve_folds(fs.manifest, config.folds, config.seed);
  } catch (const ManifestError& e) {
    throw CommandError(e.what());
  }
  const auto& rows = fs.manifest.rows;
  const std::size_t n = rows.size();
  if (test_fold >= 0 && std::find(fs.folds.begin(), fs.folds.end(), test_fold) == fs.folds.end()) {
    throw CommandError("fold " + std::to_string(test_fold) + " is empty");
  }
  const auto dir = root / "features";
  write_folds_csv(root / "folds.csv", fs.manifest, fs.folds);

  std::vector<std::uint64_t> content(n);
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::filesystem::is_regular_file(rows[i].path)) {
      errors.push_back(rows[i].path.string() + ": file not found");
      continue;
    }
    content[i] = Fnv1a().update(read_file(rows[i].path)).digest();
  }
  auto fail_if = [&errors]() {
    if (errors.empty()) return;
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw CommandError(msg);
  };
  fail_if();

  const std::uint64_t pre_key = preprocess_key(config);
  const CodebookConfig cbc = config.codebook_config();
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < n; ++i) {
    if (fs.folds[i] != test_fold) train.push_back(i);
  }
  if (train.empty()) throw CommandError("no training images for the codebook");
  Fnv1a cbh;
  cbh.update("codebook-v1").update(pre_key).update(std::uint64_t{cbc.k}).update(std::uint64_t{cbc.patches});
  cbh.update(std::uint64_t{cbc.patch_side}).update(std::uint64_t{cbc.rounds}).update(cbc.seed);
  hash_real(cbh, cbc.epsilon);
  hash_real(cbh, cbc.variance_floor);
  cbh.update(std::uint64_t{config.augment});
  hash_real(cbh, config.augment ? config.augment_step : 0.0);
  for (std::size_t i : train) cbh.update(content[i]);
  const std::string cb_key = hex(cbh.digest());

  const std::string tag = test_fold < 0 ? "all" : "fold" + std::to_string(test_fold);
  fs.codebook = dir / ("codebook_" + tag + ".bin");
  const auto key_path = dir / ("codebook_" + tag + ".key");
  fs.codebook_reused = std::filesystem::exists(fs.codebook) && std::filesystem::exists(key_path) &&
                       read_file(key_path) == cb_key + "\n";

  std::vector<std::filesystem::path> cache(n);
  std::vector<bool> need(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    Fnv1a h;
    h.update("feat-v1").update(cb_key).update(content[i]).update(std::uint64_t{config.grid});
    cache[i] = dir / "cache" / (hex(h.digest()) + ".feat");
    need[i] = !std::filesystem::exists(cache[i]);
  }
  if (!fs.codebook_reused) {
    for (std::size_t i : train) need[i] = true;
  }

  std::vector<ImageBuffer> pre(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!need[i]) continue;
    try {
      pre[i] = preprocess(read_image(rows[i].path), config);
    } catch (const std::exception& e) {
      errors.push_back(rows[i].path.string() + ": " + e.what());
    }
  }
  fail_if();

  Codebook cb;
  if (fs.codebook_reused) {
    cb = load_codebook(fs.codebook);
    log << "codebook: reused " << fs.codebook.string() << "\n";
  } else {
    const auto& first = pre[train.front()];
    const bool uniform = std::all_of(train.begin(), train.end(), [&](std::size_t i) {
      return pre[i].height == first.height && pre[i].width == first.width && pre[i].channels == first.channels;
    });
    try {
      if (uniform) {
        const std::size_t rot = config.augment ? rotation_count(config.augment_step) : 1;
        PatchSource src;
        src.count = train.size() * rot;
        src.height = first.height;
        src.width = first.width;
        src.channels = first.channels;
        src.make = [&](std::size_t j) {
          const ImageBuffer& img = pre[train[j / rot]];
          const std::size_t r = j % rot;
          return filter_image(r == 0 ? img : rotate(img, config.augment_step * static_cast<double>(r)),
                              config.filter);
        };
        cb = learn_codebook(src, cbc);
        log << "codebook: K = " << cbc.k << " from " << cbc.patches << " patches of " << src.count
            << " training images\n";
      } else {
        if (config.augment) throw CommandError("augmentation needs equally sized images; set resize");
        std::vector<ImageBuffer> filtered;
        for (std::size_t i : train) filtered.push_back(filter_image(pre[i], config.filter));
        cb = learn_codebook(filtered, cbc);
        log << "codebook: K = " << cbc.k << " from " << cbc.patches << " patches of " << filtered.size()
            << " training images\n";
      }
    } catch (const std::invalid_argument& e) {
      throw CommandError(std::string("codebook: ") + e.what());
    }
    save_codebook(fs.codebook, cb);
    write_file_atomic(key_path, cb_key + "\n");
  }

  std::string index = "path,label,fold,cache\n";
  fs.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = fs.samples[i];
    s.label = rows[i].label_index;
    if (!std::filesystem::exists(cache[i])) {
      try {
        s.x = encode(filter_image(pre[i], config.filter), cb, config.grid);
      } catch (const std::exception& e) {
        errors.push_back(rows[i].path.string() + ": " + e.what());
        continue;
      }
      save_features(cache[i], s.x);
      // Train on exactly what a later run reads back.
      s.x = load_features(cache[i]);
      ++fs.encoded;
    } else {
      s.x = load_features(cache[i]);
      ++fs.cache_hits;
    }
    index += rows[i].path.string() + "," + rows[i].label + "," + std::to_string(fs.folds[i]) + "," +
             cache[i].filename().string() + "\n";
  }
  fail_if();
  write_file_atomic(dir / ("index_" + tag + ".csv"), index);
  log << "features: " << fs.encoded << " encoded, " << fs.cache_hits << " cache hits\n";
  return fs;
}

}  // namespace tspn::cli
