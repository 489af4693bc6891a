#pragma once

#include <cstdint>
#include <vector>

#include "tspn/features/patches.hpp"

namespace tspn {

struct KMeansResult {
  PatchMatrix centroids;               // K x dim
  std::vector<std::uint32_t> assignment;
  std::vector<double> sse;             // within-cluster SSE after each round's assignment
  std::uint32_t rounds = 0;            // rounds actually run
  std::uint32_t reseeded = 0;          // empty clusters restarted from the farthest point
};

/// Lloyd's algorithm for at most `rounds` rounds, stopping early once the
/// assignment no longer changes. Starts from K distinct rows drawn with
/// `seed`; ties in assignment go to the lowest centroid index.
KMeansResult kmeans(const PatchMatrix& points, std::uint32_t k, std::uint32_t rounds, std::uint64_t seed);

}  // namespace tspn
