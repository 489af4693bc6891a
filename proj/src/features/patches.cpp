#include "tspn/features/patches.hpp"

#include <algorithm>
#include <random>
#include <utility>
#include <stdexcept>
#include <vector>

namespace tspn {

void copy_patch(const ImageBuffer& img, std::size_t row, std::size_t col, std::size_t side, double* out) {
  const std::size_t span = side * img.channels;
  for (std::size_t r = 0; r < side; ++r) {
    const double* src = img.pixels.data() + ((row + r) * img.width + col) * img.channels;
    std::copy(src, src + span, out + r * span);
  }
}

PatchMatrix sample_patches(std::span<const ImageBuffer> images, std::size_t n, std::size_t side,
                           std::uint64_t seed) {
  if (images.empty()) throw std::invalid_argument("no images to sample patches from");
  if (side == 0) throw std::invalid_argument("patch side must be positive");
  const std::size_t channels = images.front().channels;
  std::vector<std::uint64_t> offsets{0};
  for (const auto& img : images) {
    if (img.height < side || img.width < side) {
      throw std::invalid_argument("image of " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                  " is smaller than the patch side " + std::to_string(side));
    }
    if (img.channels != channels) throw std::invalid_argument("images differ in channel count");
    offsets.push_back(offsets.back() + (img.height - side + 1) * (img.width - side + 1));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, offsets.back() - 1);
  PatchMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(side * side * channels));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t flat = pick(rng);
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat) - 1;
    const auto& img = images[static_cast<std::size_t>(it - offsets.begin())];
    const std::uint64_t local = flat - *it;
    const std::size_t across = img.width - side + 1;
    copy_patch(img, local / across, local % across, side, out.row(static_cast<Eigen::Index>(i)).data());
  }
  return out;
}

PatchMatrix sample_patches(const PatchSource& source, std::size_t n, std::size_t side, std::uint64_t seed) {
  if (source.count == 0) throw std::invalid_argument("no images to sample patches from");
  if (side == 0) throw std::invalid_argument("patch side must be positive");
  if (source.height < side || source.width < side) {
    throw std::invalid_argument("image of " + std::to_string(source.height) + "x" + std::to_string(source.width) +
                                " is smaller than the patch side " + std::to_string(side));
  }
  const std::uint64_t per = (source.height - side + 1) * (source.width - side + 1);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, per * source.count - 1);
  std::vector<std::pair<std::uint64_t, std::size_t>> draws(n);
  for (std::size_t i = 0; i < n; ++i) draws[i] = {pick(rng), i};
  std::sort(draws.begin(), draws.end());

  PatchMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(side * side * source.channels));
  const std::size_t across = source.width - side + 1;
  std::size_t current = source.count;
  ImageBuffer img;
  for (const auto& [flat, row] : draws) {
    const std::size_t which = static_cast<std::size_t>(flat / per);
    if (which != current) {
      img = source.make(which);
      if (img.height != source.height || img.width != source.width || img.channels != source.channels) {
        throw std::invalid_argument("patch source image " + std::to_string(which) + " has the wrong shape");
      }
      current = which;
    }
    const std::uint64_t local = flat % per;
    copy_patch(img, local / across, local % across, side, out.row(static_cast<Eigen::Index>(row)).data());
  }
  return out;
}

PatchMatrix all_patches(const ImageBuffer& img, std::size_t side) {
  if (img.height < side || img.width < side) throw std::invalid_argument("image smaller than the patch side");
  const std::size_t down = img.height - side + 1;
  const std::size_t across = img.width - side + 1;
  PatchMatrix out(static_cast<Eigen::Index>(down * across), static_cast<Eigen::Index>(side * side * img.channels));
  for (std::size_t r = 0; r < down; ++r) {
    for (std::size_t c = 0; c < across; ++c) {
      copy_patch(img, r, c, side, out.row(static_cast<Eigen::Index>(r * across + c)).data());
    }
  }
  return out;
}

void normalize_patches(PatchMatrix& patches, double variance_floor) {
  const auto d = patches.cols();
  if (d < 2) throw std::invalid_argument("patches need at least two entries to normalize");
  for (Eigen::Index i = 0; i < patches.rows(); ++i) {
    auto row = patches.row(i);
    const double mean = row.mean();
    row.array() -= mean;
    const double var = row.squaredNorm() / static_cast<double>(d - 1);
    row /= std::sqrt(var + variance_floor);
  }
}

Eigen::MatrixXd sample_covariance(const PatchMatrix& patches) {
  if (patches.rows() < 2) throw std::invalid_argument("covariance needs at least two patches");
  const Eigen::RowVectorXd mean = patches.colwise().mean();
  const Eigen::MatrixXd centered = patches.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(patches.rows() - 1);
}

ZcaTransform ZcaTransform::fit(const PatchMatrix& patches, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ZCA epsilon must be positive");
  if (patches.rows() <= patches.cols()) {
    throw std::invalid_argument("ZCA fit needs more patches (" + std::to_string(patches.rows()) +
                                ") than dimensions (" + std::to_string(patches.cols()) + ")");
  }
  ZcaTransform z;
  z.epsilon = epsilon;
  z.mean = patches.colwise().mean().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sample_covariance(patches));
  const Eigen::VectorXd scale = (eig.eigenvalues().array().max(0.0) + epsilon).rsqrt();
  z.matrix = eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();
  return z;
}

void ZcaTransform::apply(PatchMatrix& patches) const {
  if (static_cast<std::size_t>(patches.cols()) != dim()) {
    throw std::invalid_argument("patch dimension " + std::to_string(patches.cols()) +
                                " does not match the whitening transform (" + std::to_string(dim()) + ")");
  }
  patches.rowwise() -= mean.transpose();
  // matrix is symmetric, so row-vector form is x^T M.
  patches = patches * matrix;
}

Whitening whiten_fit(PatchMatrix& patches, double epsilon, double variance_floor) {
  Whitening w;
  w.variance_floor = variance_floor;
  normalize_patches(patches, variance_floor);
  w.zca = ZcaTransform::fit(patches, epsilon);
  return w;
}

void whiten_apply(const Whitening& w, PatchMatrix& patches) { w.apply(patches); }

}  // namespace tspn
