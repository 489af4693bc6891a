#include "tspn/features/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tspn {

namespace {

double sq_dist(const double* a, const double* b, Eigen::Index d) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    acc += t * t;
  }
  return acc;
}

}  // namespace

KMeansResult kmeans(const PatchMatrix& points, std::uint32_t k, std::uint32_t rounds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  const Eigen::Index d = points.cols();
  if (k == 0) throw std::invalid_argument("k-means needs K >= 1");
  if (k > n) {
    throw std::invalid_argument("k-means with K = " + std::to_string(k) + " but only " + std::to_string(n) +
                                " points");
  }
  if (rounds == 0) throw std::invalid_argument("k-means needs at least one round");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k entries are a uniform draw without replacement.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  KMeansResult res;
  res.centroids.resize(k, d);
  for (std::uint32_t c = 0; c < k; ++c) res.centroids.row(c) = points.row(static_cast<Eigen::Index>(order[c]));
  res.assignment.assign(n, std::numeric_limits<std::uint32_t>::max());

  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);
  for (std::uint32_t round = 0; round < rounds; ++round) {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = points.row(static_cast<Eigen::Index>(i)).data();
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::uint32_t c = 0; c < k; ++c) {
        const double dd = sq_dist(x, res.centroids.row(c).data(), d);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      changed = changed || res.assignment[i] != best;
      res.assignment[i] = best;
      dist[i] = best_d;
      sse += best_d;
    }
    res.sse.push_back(sse);
    res.rounds = round + 1;
    if (!changed) break;

    PatchMatrix sums = PatchMatrix::Zero(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(res.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[res.assignment[i]];
    }
    std::vector<bool> taken(n, false);
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: restart it on the point worst served by its centroid.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && (far == n || dist[i] > dist[far])) far = i;
      }
      taken[far] = true;
      dist[far] = 0.0;
      res.centroids.row(c) = points.row(static_cast<Eigen::Index>(far));
      ++res.reseeded;
    }
  }
  return res;
}

}  // namespace tspn
