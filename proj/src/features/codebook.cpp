#include "tspn/features/codebook.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "tspn/spn/graph.hpp"
#include "tspn/util/atomic_file.hpp"

namespace tspn {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'P', 'N', 'C', 'B', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, std::string name) : data_(data), name_(std::move(name)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw FormatError(name_ + ": truncated file");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void bytes(void* out, std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(name_ + ": truncated file");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }

  void expect_end() const {
    if (pos_ != data_.size()) throw FormatError(name_ + ": trailing bytes");
  }

 private:
  const std::string& data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

namespace {

Codebook fit_codebook(PatchMatrix patches, std::size_t channels, const CodebookConfig& config,
                      KMeansResult* stats) {
  Codebook cb;
  cb.patch_side = config.patch_side;
  cb.channels = static_cast<std::uint32_t>(channels);
  cb.seed = config.seed;
  cb.whitening = whiten_fit(patches, config.epsilon, config.variance_floor);
  cb.whitening.zca.apply(patches);
  KMeansResult km = kmeans(patches, config.k, config.rounds, config.seed + 1);
  cb.centroids = km.centroids;
  if (stats != nullptr) *stats = std::move(km);
  return cb;
}

}  // namespace

Codebook learn_codebook(std::span<const ImageBuffer> images, const CodebookConfig& config,
                        KMeansResult* stats) {
  if (images.empty()) throw std::invalid_argument("no images for the codebook");
  return fit_codebook(sample_patches(images, config.patches, config.patch_side, config.seed),
                      images.front().channels, config, stats);
}

Codebook learn_codebook(const PatchSource& source, const CodebookConfig& config, KMeansResult* stats) {
  return fit_codebook(sample_patches(source, config.patches, config.patch_side, config.seed), source.channels,
                      config, stats);
}

PatchMatrix encode_patches(const ImageBuffer& img, const Codebook& codebook) {
  if (img.height < codebook.patch_side || img.width < codebook.patch_side) {
    throw ShapeError("image of " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                     " is smaller than the " + std::to_string(codebook.patch_side) + "-pixel patch");
  }
  if (img.channels != codebook.channels) {
    throw ShapeError("image has " + std::to_string(img.channels) + " channels, codebook expects " +
                     std::to_string(codebook.channels));
  }
  PatchMatrix patches = all_patches(img, codebook.patch_side);
  codebook.whitening.apply(patches);
  const Eigen::Index k = codebook.centroids.rows();
  PatchMatrix act(patches.rows(), k);
  Eigen::VectorXd z(k);
  for (Eigen::Index i = 0; i < patches.rows(); ++i) {
    for (Eigen::Index c = 0; c < k; ++c) z[c] = (patches.row(i) - codebook.centroids.row(c)).norm();
    const double mu = z.mean();
    for (Eigen::Index c = 0; c < k; ++c) act(i, c) = std::max(0.0, mu - z[c]);
  }
  return act;
}

FeatureTensor encode(const ImageBuffer& img, const Codebook& codebook, std::uint32_t grid) {
  if (grid == 0) throw std::invalid_argument("pooling grid must be positive");
  const PatchMatrix act = encode_patches(img, codebook);
  const std::size_t down = img.height - codebook.patch_side + 1;
  const std::size_t across = img.width - codebook.patch_side + 1;
  if (down < grid || across < grid) {
    throw ShapeError("patch grid " + std::to_string(down) + "x" + std::to_string(across) +
                     " is smaller than the pooling grid " + std::to_string(grid));
  }
  auto edge = [grid](std::size_t i, std::size_t n) {
    return static_cast<std::size_t>(std::lround(static_cast<double>(i) * static_cast<double>(n) / grid));
  };
  const std::size_t k = codebook.k();
  FeatureTensor out(grid, k);
  for (std::uint32_t gr = 0; gr < grid; ++gr) {
    for (std::uint32_t gc = 0; gc < grid; ++gc) {
      auto cell = out.cell(gr, gc);
      for (std::size_t r = edge(gr, down); r < edge(gr + 1, down); ++r) {
        for (std::size_t c = edge(gc, across); c < edge(gc + 1, across); ++c) {
          const auto row = act.row(static_cast<Eigen::Index>(r * across + c));
          for (std::size_t j = 0; j < k; ++j) cell[j] = std::max(cell[j], row[static_cast<Eigen::Index>(j)]);
        }
      }
    }
  }
  return out;
}

void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
  const auto dim = static_cast<std::uint32_t>(cb.dim());
  if (cb.whitening.zca.dim() != dim) throw std::invalid_argument("codebook whitening does not match centroids");
  std::string out(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, cb.k());
  put(out, dim);
  put(out, cb.whitening.zca.epsilon);
  put(out, cb.seed);
  put(out, cb.patch_side);
  put(out, cb.channels);
  put(out, cb.whitening.variance_floor);
  for (Eigen::Index i = 0; i < cb.centroids.rows(); ++i) {
    for (Eigen::Index j = 0; j < cb.centroids.cols(); ++j) put(out, cb.centroids(i, j));
  }
  const auto& m = cb.whitening.zca.matrix;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
  }
  for (Eigen::Index i = 0; i < cb.whitening.zca.mean.size(); ++i) put(out, cb.whitening.zca.mean[i]);
  write_file_atomic(path, out);
}

Codebook load_codebook(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader in(data, path.string());
  char magic[8];
  in.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError(path.string() + ": not a codebook file");
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw FormatError(path.string() + ": unsupported codebook version " + std::to_string(version));
  const auto k = in.get<std::uint32_t>();
  const auto dim = in.get<std::uint32_t>();
  Codebook cb;
  cb.whitening.zca.epsilon = in.get<double>();
  cb.seed = in.get<std::uint64_t>();
  cb.patch_side = in.get<std::uint32_t>();
  cb.channels = in.get<std::uint32_t>();
  cb.whitening.variance_floor = in.get<double>();
  if (static_cast<std::size_t>(cb.patch_side) * cb.patch_side * cb.channels != dim) {
    throw FormatError(path.string() + ": dimension does not match patch side and channels");
  }
  cb.centroids.resize(k, dim);
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) cb.centroids(i, j) = in.get<double>();
  }
  cb.whitening.zca.matrix.resize(dim, dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) cb.whitening.zca.matrix(i, j) = in.get<double>();
  }
  cb.whitening.zca.mean.resize(dim);
  for (std::uint32_t i = 0; i < dim; ++i) cb.whitening.zca.mean[i] = in.get<double>();
  in.expect_end();
  return cb;
}

void save_features(const std::filesystem::path& path, const FeatureTensor& x) {
  std::string out;
  put(out, static_cast<std::uint32_t>(x.grid));
  put(out, static_cast<std::uint32_t>(x.depth));
  for (double v : x.values) put(out, static_cast<float>(v));
  write_file_atomic(path, out);
}

FeatureTensor load_features(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader in(data, path.string());
  const auto g = in.get<std::uint32_t>();
  const auto k = in.get<std::uint32_t>();
  FeatureTensor x(g, k);
  for (double& v : x.values) v = in.get<float>();
  in.expect_end();
  return x;
}

}  // namespace tspn
