#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tspn {

/// Pooled G x G x K encoding of one image, row-major [row][col][k].
struct FeatureTensor {
  std::size_t grid = 0;
  std::size_t depth = 0;
  std::vector<double> values;

  FeatureTensor() = default;
  FeatureTensor(std::size_t grid_side, std::size_t k)
      : grid(grid_side), depth(k), values(grid_side * grid_side * k, 0.0) {}

  double& at(std::size_t row, std::size_t col, std::size_t k) {
    return values[(row * grid + col) * depth + k];
  }
  double at(std::size_t row, std::size_t col, std::size_t k) const {
    return values[(row * grid + col) * depth + k];
  }
  std::span<const double> cell(std::size_t row, std::size_t col) const {
    return {values.data() + (row * grid + col) * depth, depth};
  }
  std::span<double> cell(std::size_t row, std::size_t col) {
    return {values.data() + (row * grid + col) * depth, depth};
  }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;
};

}  // namespace tspn
