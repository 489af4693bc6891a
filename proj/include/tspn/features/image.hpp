#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tspn {

/// H x W x ch pixels, row-major with interleaved channels, nominal range [0, 1].
struct ImageBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  ImageBuffer() = default;
  ImageBuffer(std::size_t h, std::size_t w, std::size_t ch, double fill = 0.0)
      : height(h), width(w), channels(ch), pixels(h * w * ch, fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  bool square() const noexcept { return height == width; }
  double& at(std::size_t r, std::size_t c, std::size_t ch = 0) {
    return pixels[(r * width + c) * channels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch = 0) const {
    return pixels[(r * width + c) * channels + ch];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// Symmetric reflection of an index into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n);

/// Pads the short side to max(H, W) by mirroring border rows or columns; the
/// leading side gets floor(deficit / 2), the trailing side the rest.
ImageBuffer squarify(const ImageBuffer& img);

/// Rotation about the image center, counter-clockwise in degrees. Multiples of
/// 90 degrees on square images are exact index permutations; other angles use
/// bilinear interpolation with mirrored samples outside the frame.
ImageBuffer rotate(const ImageBuffer& img, double degrees);

/// Rotations by 0, step, 2 step, ... below 360 degrees.
std::vector<ImageBuffer> augment_rotations(const ImageBuffer& img, double step_degrees = 10.0);

/// Bilinear resize with pixel-center alignment.
ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t height, std::size_t width);

ImageBuffer extract_channel(const ImageBuffer& img, std::size_t channel);
ImageBuffer to_gray(const ImageBuffer& img);

}  // namespace tspn
