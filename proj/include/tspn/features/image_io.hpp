#pragma once

#include <filesystem>
#include <stdexcept>

#include "tspn/features/image.hpp"

namespace tspn {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PNG (read as 8-bit gray or RGB, alpha composited on black), BMP
/// (uncompressed 8/24/32-bit) and binary or ASCII PGM/PPM. The format is
/// sniffed from the file header.
/// Pixels are scaled to [0, 1].
ImageBuffer read_image(const std::filesystem::path& path);

/// 8-bit PNG, values clamped to [0, 1].
void write_png(const std::filesystem::path& path, const ImageBuffer& img);
/// Binary PGM or PPM depending on the channel count.
void write_pnm(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace tspn
