#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

#include "tspn/features/image.hpp"

namespace tspn {

/// One flattened patch per row, entries ordered [row][col][channel].
using PatchMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void copy_patch(const ImageBuffer& img, std::size_t row, std::size_t col, std::size_t side, double* out);

/// n patches drawn uniformly over all (image, top-left position) pairs.
PatchMatrix sample_patches(std::span<const ImageBuffer> images, std::size_t n, std::size_t side,
                           std::uint64_t seed);

/// Same draws as sample_patches over `count` images of the given shapes, but
/// each image is produced by `make(i)` only while its patches are copied, so
/// large augmented pools never sit in memory at once.
struct PatchSource {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::function<ImageBuffer(std::size_t)> make;
};
PatchMatrix sample_patches(const PatchSource& source, std::size_t n, std::size_t side, std::uint64_t seed);

/// Every stride-1 patch of one image, positions in row-major order.
PatchMatrix all_patches(const ImageBuffer& img, std::size_t side);

/// Per row: subtract the mean and divide by sqrt(sample variance + floor).
void normalize_patches(PatchMatrix& patches, double variance_floor = 10.0);

/// x -> V (D + eps I)^(-1/2) V^T (x - mean), fitted on the sample covariance
/// (n - 1 denominator).
struct ZcaTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd matrix;
  double epsilon = 0.01;

  static ZcaTransform fit(const PatchMatrix& patches, double epsilon = 0.01);
  void apply(PatchMatrix& patches) const;
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

Eigen::MatrixXd sample_covariance(const PatchMatrix& patches);

struct Whitening {
  ZcaTransform zca;
  double variance_floor = 10.0;

  void apply(PatchMatrix& patches) const {
    normalize_patches(patches, variance_floor);
    zca.apply(patches);
  }
};

/// Normalizes `patches` in place and fits ZCA on the result.
Whitening whiten_fit(PatchMatrix& patches, double epsilon = 0.01, double variance_floor = 10.0);
void whiten_apply(const Whitening& w, PatchMatrix& patches);

}  // namespace tspn
