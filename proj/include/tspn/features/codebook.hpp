#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>

#include "tspn/features/image.hpp"
#include "tspn/features/kmeans.hpp"
#include "tspn/features/patches.hpp"
#include "tspn/spn/feature_tensor.hpp"

namespace tspn {

struct CodebookConfig {
  std::uint32_t k = 1600;
  std::size_t patches = 400000;
  std::uint32_t patch_side = 6;
  std::uint32_t rounds = 50;
  double epsilon = 0.01;
  double variance_floor = 10.0;
  std::uint64_t seed = 0;
};

struct Codebook {
  PatchMatrix centroids;  // K x (side * side * channels), whitened space
  Whitening whitening;
  std::uint32_t patch_side = 6;
  std::uint32_t channels = 1;
  std::uint64_t seed = 0;

  std::uint32_t k() const { return static_cast<std::uint32_t>(centroids.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Patch sampling, contrast normalization, ZCA and k-means over `images`
/// (already filtered).
Codebook learn_codebook(std::span<const ImageBuffer> images, const CodebookConfig& config,
                        KMeansResult* stats = nullptr);
Codebook learn_codebook(const PatchSource& source, const CodebookConfig& config, KMeansResult* stats = nullptr);

/// Triangle activations max(0, mean(z) - z_k) of every stride-1 patch, max
/// pooled over a G x G partition of the patch grid with cell edges
/// round(i * n / G).
FeatureTensor encode(const ImageBuffer& img, const Codebook& codebook, std::uint32_t grid);

/// Activations before pooling: (H - side + 1) * (W - side + 1) rows of K.
PatchMatrix encode_patches(const ImageBuffer& img, const Codebook& codebook);

/// Binary layout, little endian: "TSPNCB\0\0", u32 version, u32 K, u32 dim,
/// f64 epsilon, u64 seed, u32 patch_side, u32 channels, f64 variance_floor,
/// then f64 centroids (K x dim), ZCA matrix (dim x dim) and mean (dim), all
/// row-major.
void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

/// Feature cache: u32 G, u32 K, then G*G*K f32 values row-major.
void save_features(const std::filesystem::path& path, const FeatureTensor& x);
FeatureTensor load_features(const std::filesystem::path& path);

}  // namespace tspn
