#include "tspn/learn/margin.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tspn/spn/evaluate.hpp"

namespace tspn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_args(std::span<const double> scores, std::uint32_t true_label) {
  if (scores.size() < 2) throw std::invalid_argument("a margin needs at least two labels");
  if (true_label >= scores.size()) throw std::out_of_range("true label out of range");
}
}  // namespace

MarginResult margin(std::span<const double> log_scores, std::uint32_t true_label) {
  check_args(log_scores, true_label);
  MarginResult r;
  bool found = false;
  double best = -kInf;
  for (std::uint32_t y = 0; y < log_scores.size(); ++y) {
    if (y == true_label) continue;
    if (!found || log_scores[y] > best) {
      best = log_scores[y];
      r.runner_up = y;
      found = true;
    }
  }
  const double truth = log_scores[true_label];
  if (best == -kInf) {
    r.unbounded = true;
    // Both sides impossible: treat as a tie rather than producing NaN.
    r.log_margin = truth == -kInf ? 0.0 : kInf;
  } else {
    r.log_margin = truth - best;
  }
  r.d = std::exp(r.log_margin);
  return r;
}

double soft_margin(std::span<const double> log_scores, std::uint32_t true_label, double eta) {
  check_args(log_scores, true_label);
  if (!(eta >= 1.0)) throw std::invalid_argument("softmax sharpness eta must be >= 1");
  std::vector<double> scaled;
  scaled.reserve(log_scores.size() - 1);
  for (std::uint32_t y = 0; y < log_scores.size(); ++y) {
    if (y != true_label) scaled.push_back(eta * log_scores[y]);
  }
  const double competitors = log_sum_exp(scaled);
  const double truth = log_scores[true_label];
  if (competitors == -kInf) return truth == -kInf ? 0.0 : kInf;
  return truth - competitors / eta;
}

HingeValue square_hinge(double scaled_margin) {
  if (scaled_margin < 1.0) {
    const double gap = scaled_margin - 1.0;
    return {1.0 - gap * gap, -2.0 * gap};
  }
  return {1.0, 0.0};
}

}  // namespace tspn
