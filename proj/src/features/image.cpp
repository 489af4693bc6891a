#include "tspn/features/image.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tspn {

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n <= 0) throw std::invalid_argument("reflect_index on an empty axis");
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

ImageBuffer squarify(const ImageBuffer& img) {
  if (img.empty()) throw std::invalid_argument("squarify of an empty image");
  const std::size_t side = std::max(img.height, img.width);
  const auto top = static_cast<std::ptrdiff_t>((side - img.height) / 2);
  const auto left = static_cast<std::ptrdiff_t>((side - img.width) / 2);
  ImageBuffer out(side, side, img.channels);
  const auto h = static_cast<std::ptrdiff_t>(img.height);
  const auto w = static_cast<std::ptrdiff_t>(img.width);
  for (std::size_t r = 0; r < side; ++r) {
    const auto sr = static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(r) - top, h));
    for (std::size_t c = 0; c < side; ++c) {
      const auto sc = static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(c) - left, w));
      for (std::size_t k = 0; k < img.channels; ++k) out.at(r, c, k) = img.at(sr, sc, k);
    }
  }
  return out;
}

namespace {

ImageBuffer rotate_quarter(const ImageBuffer& img, int quarters) {
  const std::size_t n = img.height;
  ImageBuffer out(n, n, img.channels);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t sr = r;
      std::size_t sc = c;
      // Source pixel for a counter-clockwise turn.
      switch (quarters) {
        case 1: sr = c; sc = n - 1 - r; break;
        case 2: sr = n - 1 - r; sc = n - 1 - c; break;
        case 3: sr = n - 1 - c; sc = r; break;
        default: break;
      }
      for (std::size_t k = 0; k < img.channels; ++k) out.at(r, c, k) = img.at(sr, sc, k);
    }
  }
  return out;
}

double sample_bilinear(const ImageBuffer& img, double y, double x, std::size_t k) {
  const auto h = static_cast<std::ptrdiff_t>(img.height);
  const auto w = static_cast<std::ptrdiff_t>(img.width);
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double ty = y - fy;
  const double tx = x - fx;
  const auto y0 = static_cast<std::ptrdiff_t>(fy);
  const auto x0 = static_cast<std::ptrdiff_t>(fx);
  auto px = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    return img.at(static_cast<std::size_t>(reflect_index(r, h)),
                  static_cast<std::size_t>(reflect_index(c, w)), k);
  };
  const double top = (1.0 - tx) * px(y0, x0) + tx * px(y0, x0 + 1);
  const double bottom = (1.0 - tx) * px(y0 + 1, x0) + tx * px(y0 + 1, x0 + 1);
  return (1.0 - ty) * top + ty * bottom;
}

}  // namespace

ImageBuffer rotate(const ImageBuffer& img, double degrees) {
  if (img.empty()) throw std::invalid_argument("rotate of an empty image");
  const double turns = degrees / 90.0;
  if (img.square() && turns == std::round(turns)) {
    int q = static_cast<int>(std::fmod(std::round(turns), 4.0));
    if (q < 0) q += 4;
    return rotate_quarter(img, q);
  }
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  ImageBuffer out(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      // Inverse map: rotate the output coordinate clockwise back into the source.
      // Rows grow downward, so counter-clockwise on screen flips the sign of sn.
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      for (std::size_t k = 0; k < img.channels; ++k) out.at(r, c, k) = sample_bilinear(img, sy, sx, k);
    }
  }
  return out;
}

std::vector<ImageBuffer> augment_rotations(const ImageBuffer& img, double step_degrees) {
  if (!(step_degrees > 0.0)) throw std::invalid_argument("rotation step must be positive");
  if (!img.square()) throw std::invalid_argument("augment_rotations expects a square image");
  std::vector<ImageBuffer> out;
  for (int i = 0; static_cast<double>(i) * step_degrees < 360.0 - 1e-9; ++i) {
    out.push_back(rotate(img, static_cast<double>(i) * step_degrees));
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t height, std::size_t width) {
  if (img.empty() || height == 0 || width == 0) throw std::invalid_argument("resize of an empty image");
  ImageBuffer out(height, width, img.channels);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  for (std::size_t r = 0; r < height; ++r) {
    const double y = (static_cast<double>(r) + 0.5) * sy - 0.5;
    for (std::size_t c = 0; c < width; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * sx - 0.5;
      for (std::size_t k = 0; k < img.channels; ++k) out.at(r, c, k) = sample_bilinear(img, y, x, k);
    }
  }
  return out;
}

ImageBuffer extract_channel(const ImageBuffer& img, std::size_t channel) {
  if (channel >= img.channels) throw std::out_of_range("channel out of range");
  ImageBuffer out(img.height, img.width, 1);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) out.at(r, c) = img.at(r, c, channel);
  }
  return out;
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  ImageBuffer out(img.height, img.width, 1);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      if (img.channels >= 3) {
        out.at(r, c) = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) + 0.114 * img.at(r, c, 2);
      } else {
        out.at(r, c) = img.at(r, c, 0);
      }
    }
  }
  return out;
}

}  // namespace tspn
