#include "tspn/features/filter.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "tspn/spn/graph.hpp"

namespace tspn {

const char* to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::None: return "none";
    case FilterKind::IdealHpf: return "ideal_hpf";
    case FilterKind::Log: return "log";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& name) {
  if (name == "none") return FilterKind::None;
  if (name == "ideal_hpf" || name == "hpf") return FilterKind::IdealHpf;
  if (name == "log") return FilterKind::Log;
  throw std::invalid_argument("unknown filter '" + name + "' (none, ideal_hpf, log)");
}

void FilterSpec::validate() const {
  if (mask <= 0 || mask % 2 == 0) throw std::invalid_argument("LoG mask side must be odd and positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("LoG sigma must be positive");
  if (!(gain_low >= 0.0) || !(gain_high >= 0.0)) throw std::invalid_argument("filter gains must be >= 0");
}

std::vector<double> log_kernel(double sigma, int mask) {
  FilterSpec check;
  check.sigma = sigma;
  check.mask = mask;
  check.validate();
  const int half = mask / 2;
  const double s2 = sigma * sigma;
  std::vector<double> k;
  k.reserve(static_cast<std::size_t>(mask * mask));
  for (int y = -half; y <= half; ++y) {
    for (int x = -half; x <= half; ++x) {
      const double r2 = static_cast<double>(x * x + y * y);
      const double t = r2 / (2.0 * s2);
      k.push_back(-(1.0 - t) * std::exp(-t) / (std::numbers::pi * s2 * s2));
    }
  }
  const double mean = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size());
  for (double& v : k) v -= mean;
  // Fold the rounding residue into the center tap.
  k[k.size() / 2] -= std::accumulate(k.begin(), k.end(), 0.0);
  return k;
}

namespace {

ImageBuffer convolve_mirror(const ImageBuffer& img, const std::vector<double>& kernel, int mask) {
  const int half = mask / 2;
  const auto h = static_cast<std::ptrdiff_t>(img.height);
  const auto w = static_cast<std::ptrdiff_t>(img.width);
  ImageBuffer out(img.height, img.width, img.channels);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        std::size_t t = 0;
        for (int dy = -half; dy <= half; ++dy) {
          const auto sr = static_cast<std::size_t>(reflect_index(r + dy, h));
          for (int dx = -half; dx <= half; ++dx, ++t) {
            const auto sc = static_cast<std::size_t>(reflect_index(c + dx, w));
            acc += kernel[t] * img.at(sr, sc, ch);
          }
        }
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) = acc;
      }
    }
  }
  return out;
}

ImageBuffer ideal_hpf(const ImageBuffer& img, const FilterSpec& spec) {
  if (!img.square()) {
    throw ShapeError("ideal high-pass filter needs a square image, got " + std::to_string(img.height) +
                     "x" + std::to_string(img.width));
  }
  const auto n = static_cast<int>(img.height);
  const double d0 = spec.d0 > 0.0 ? spec.d0 : 2.0 * std::numbers::pi / n;
  const std::size_t count = img.height * img.width;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
  if (buf == nullptr) throw std::bad_alloc();
  fftw_plan fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  std::vector<double> gain(count);
  const double tol = 1e-12 * d0;
  auto omega = [n](int k) { return 2.0 * std::numbers::pi * (k <= n / 2 ? k : k - n) / n; };
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const bool inside = std::abs(omega(u)) <= d0 + tol && std::abs(omega(v)) <= d0 + tol;
      gain[static_cast<std::size_t>(u * n + v)] = inside ? spec.gain_low : spec.gain_high;
    }
  }

  ImageBuffer out(img.height, img.width, img.channels);
  const double norm = 1.0 / static_cast<double>(count);
  for (std::size_t ch = 0; ch < img.channels; ++ch) {
    for (std::size_t i = 0; i < count; ++i) {
      buf[i][0] = img.pixels[i * img.channels + ch];
      buf[i][1] = 0.0;
    }
    fftw_execute(fwd);
    for (std::size_t i = 0; i < count; ++i) {
      buf[i][0] *= gain[i];
      buf[i][1] *= gain[i];
    }
    fftw_execute(inv);
    for (std::size_t i = 0; i < count; ++i) out.pixels[i * img.channels + ch] = buf[i][0] * norm;
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(buf);
  return out;
}

}  // namespace

ImageBuffer filter_image(const ImageBuffer& img, const FilterSpec& spec) {
  spec.validate();
  if (img.empty()) throw std::invalid_argument("filter of an empty image");
  switch (spec.kind) {
    case FilterKind::None: return img;
    case FilterKind::Log: return convolve_mirror(img, log_kernel(spec.sigma, spec.mask), spec.mask);
    case FilterKind::IdealHpf: return ideal_hpf(img, spec);
  }
  return img;
}

}  // namespace tspn
