#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "tspn/features/image.hpp"

namespace tspn {

enum class FilterKind { None, IdealHpf, Log };

const char* to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);  // none | ideal_hpf | log

struct FilterSpec {
  FilterKind kind = FilterKind::None;
  // Ideal high-pass: gain_low inside the centered rectangle |w_u|, |w_v| <= d0
  // (angular frequency, radians per sample), gain_high outside. d0 <= 0 means
  // 2 pi / N for an N x N image.
  double d0 = 0.0;
  double gain_low = 0.07;
  double gain_high = 1.0;
  // Laplacian of Gaussian.
  double sigma = 0.2;
  int mask = 5;

  void validate() const;  // std::invalid_argument
};

/// mask x mask samples of the analytic LoG, shifted to sum to exactly zero.
/// Row-major.
std::vector<double> log_kernel(double sigma, int mask);

/// LoG: spatial convolution with mirrored borders. Ideal HPF: per-channel 2-D
/// DFT, gain mask, inverse DFT, real part; needs a square image.
ImageBuffer filter_image(const ImageBuffer& img, const FilterSpec& spec);

}  // namespace tspn
