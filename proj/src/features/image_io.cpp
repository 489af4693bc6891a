#include "tspn/features/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tspn/util/atomic_file.hpp"

namespace tspn {

namespace {

using Bytes = std::vector<unsigned char>;

Bytes slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

ImageBuffer decode_png(const Bytes& data, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, data.data(), data.size()) == 0) {
    throw ImageError(name + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t ch = color ? 3 : 1;
  Bytes raw(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError(name + ": " + msg);
  }
  ImageBuffer img(image.height, image.width, ch);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

std::uint32_t le32(const Bytes& b, std::size_t at) {
  if (at + 4 > b.size()) throw ImageError("truncated BMP");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(const Bytes& b, std::size_t at) {
  if (at + 2 > b.size()) throw ImageError("truncated BMP");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

ImageBuffer decode_bmp(const Bytes& b, const std::string& name) {
  const std::uint32_t offset = le32(b, 10);
  const std::uint32_t header = le32(b, 14);
  if (header < 40) throw ImageError(name + ": unsupported BMP header");
  const auto width = static_cast<std::int32_t>(le32(b, 18));
  const auto height_raw = static_cast<std::int32_t>(le32(b, 22));
  const std::uint16_t bpp = le16(b, 28);
  const std::uint32_t compression = le32(b, 30);
  if (compression != 0 && compression != 3) throw ImageError(name + ": compressed BMP is not supported");
  if (bpp != 8 && bpp != 24 && bpp != 32) throw ImageError(name + ": unsupported BMP depth " + std::to_string(bpp));
  if (width <= 0 || height_raw == 0) throw ImageError(name + ": bad BMP size");
  const bool bottom_up = height_raw > 0;
  const auto h = static_cast<std::size_t>(std::abs(height_raw));
  const auto w = static_cast<std::size_t>(width);
  const std::size_t stride = ((w * bpp + 31) / 32) * 4;
  if (offset + stride * h > b.size()) throw ImageError(name + ": truncated BMP pixel data");

  std::vector<std::array<unsigned char, 3>> palette;
  bool gray_palette = true;
  if (bpp == 8) {
    std::uint32_t colors = le32(b, 46);
    if (colors == 0) colors = 256;
    const std::size_t at = 14 + header;
    for (std::uint32_t i = 0; i < colors; ++i) {
      if (at + 4 * i + 3 > b.size()) throw ImageError(name + ": truncated BMP palette");
      std::array<unsigned char, 3> rgb{b[at + 4 * i + 2], b[at + 4 * i + 1], b[at + 4 * i]};
      gray_palette = gray_palette && rgb[0] == rgb[1] && rgb[1] == rgb[2];
      palette.push_back(rgb);
    }
  }
  const std::size_t ch = bpp == 8 && gray_palette ? 1 : 3;
  ImageBuffer img(h, w, ch);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t src_row = bottom_up ? h - 1 - r : r;
    const unsigned char* row = b.data() + offset + src_row * stride;
    for (std::size_t c = 0; c < w; ++c) {
      if (bpp == 8) {
        const unsigned idx = row[c];
        if (idx >= palette.size()) throw ImageError(name + ": palette index out of range");
        for (std::size_t k = 0; k < ch; ++k) img.at(r, c, k) = palette[idx][k] / 255.0;
      } else {
        const unsigned char* px = row + c * (bpp / 8);
        img.at(r, c, 0) = px[2] / 255.0;
        img.at(r, c, 1) = px[1] / 255.0;
        img.at(r, c, 2) = px[0] / 255.0;
      }
    }
  }
  return img;
}

ImageBuffer decode_pnm(const Bytes& b, const std::string& name) {
  const char kind = static_cast<char>(b[1]);
  const bool ascii = kind == '2' || kind == '3';
  const std::size_t ch = kind == '2' || kind == '5' ? 1 : 3;
  std::size_t pos = 2;
  auto token = [&]() {
    std::string t;
    while (pos < b.size()) {
      const char c = static_cast<char>(b[pos]);
      if (c == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        ++pos;
      } else {
        t.push_back(c);
        ++pos;
      }
    }
    if (t.empty()) throw ImageError(name + ": truncated PNM header");
    return t;
  };
  const std::size_t w = std::stoul(token());
  const std::size_t h = std::stoul(token());
  const std::size_t maxval = std::stoul(token());
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw ImageError(name + ": bad PNM header");
  ImageBuffer img(h, w, ch);
  if (ascii) {
    for (double& v : img.pixels) v = static_cast<double>(std::stoul(token())) / static_cast<double>(maxval);
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  if (pos + img.pixels.size() * bytes > b.size()) throw ImageError(name + ": truncated PNM data");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::size_t at = pos + i * bytes;
    const unsigned v = bytes == 2 ? (b[at] << 8) | b[at + 1] : b[at];
    img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
  const Bytes b = slurp(path);
  const std::string name = path.string();
  if (b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0) return decode_png(b, name);
  if (b.size() >= 2 && b[0] == 'B' && b[1] == 'M') return decode_bmp(b, name);
  if (b.size() >= 2 && b[0] == 'P' && b[1] >= '2' && b[1] <= '6' && b[1] != '4') return decode_pnm(b, name);
  throw ImageError(name + ": unrecognised image format (PNG, BMP, PGM/PPM supported)");
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.empty()) throw ImageError("cannot write an empty image");
  if (img.channels != 1 && img.channels != 3) throw ImageError("PNG output needs 1 or 3 channels");
  Bytes raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.pixels[i]);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (png_image_write_get_memory_size(image, size, 0, raw.data(), 0, nullptr) == 0) {
    throw ImageError(std::string("PNG encode failed: ") + image.message);
  }
  std::string encoded(size, '\0');
  if (png_image_write_to_memory(&image, encoded.data(), &size, 0, raw.data(), 0, nullptr) == 0) {
    throw ImageError(std::string("PNG encode failed: ") + image.message);
  }
  encoded.resize(size);
  write_file_atomic(path, encoded);
}

void write_pnm(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.empty()) throw ImageError("cannot write an empty image");
  if (img.channels != 1 && img.channels != 3) throw ImageError("PNM output needs 1 or 3 channels");
  std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  for (double v : img.pixels) out.push_back(static_cast<char>(to_byte(v)));
  write_file_atomic(path, out);
}

}  // namespace tspn
