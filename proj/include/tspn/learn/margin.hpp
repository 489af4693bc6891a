#pragma once

#include <cstdint>
#include <span>

namespace tspn {

struct MarginResult {
  double d = 1.0;                // S[true] / max_{y != true} S[y]
  double log_margin = 0.0;       // log d
  std::uint32_t runner_up = 0;   // best false label; lowest index on ties
  bool unbounded = false;        // every false label has score -inf
};

/// Multi-class margin from per-label log-scores. Needs at least two labels.
MarginResult margin(std::span<const double> log_scores, std::uint32_t true_label);

/// Softmax-smoothed log margin:
///   log S[true] - (1/eta) log sum_{y != true} S[y]^eta,  eta >= 1.
/// Lies below the hard log margin by at most log(C - 1) / eta.
double soft_margin(std::span<const double> log_scores, std::uint32_t true_label, double eta);

struct HingeValue {
  double value = 1.0;
  double derivative = 0.0;  // d value / d input
};

/// Square hinge: 1 - (m - 1)^2 below m = 1, constant 1 above; C^1 at the knee.
HingeValue square_hinge(double scaled_margin);

}  // namespace tspn
