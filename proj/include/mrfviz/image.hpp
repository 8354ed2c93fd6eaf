#ifndef MRFVIZ_IMAGE_HPP
#define MRFVIZ_IMAGE_HPP

// 8-bit raster images and their binary PPM / PGM (and optional PNG) forms.

#include "color.hpp"
#include "errors.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#ifdef MRFVIZ_HAVE_PNG
#include <png.h>
#endif

namespace mrfviz {

/// Row-major image, row 0 at the top; `channels` is 1 (gray) or 3 (RGB).
struct Image {
  std::size_t width = 0, height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, int ch = 3, std::uint8_t fill = 255)
      : width(w), height(h), channels(ch), data(w * h * static_cast<std::size_t>(ch), fill) {}

  std::uint8_t* px(std::size_t x, std::size_t y) { return data.data() + (y * width + x) * channels; }
  const std::uint8_t* px(std::size_t x, std::size_t y) const { return data.data() + (y * width + x) * channels; }

  void set(std::size_t x, std::size_t y, const Rgb& c) {
    auto* p = px(x, y);
    p[0] = to_byte(c.r);
    p[1] = to_byte(c.g);
    p[2] = to_byte(c.b);
  }

  bool is_white(std::size_t x, std::size_t y) const {
    const auto* p = px(x, y);
    for (int c = 0; c < channels; ++c)
      if (p[c] != 255) return false;
    return true;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Nearest-neighbour enlargement by an integer factor.
inline Image upscale(const Image& img, std::size_t factor) {
  if (factor == 0) throw DomainError("upscale factor must be positive");
  Image out(img.width * factor, img.height * factor, img.channels);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) {
      const auto* s = img.px(x / factor, y / factor);
      std::copy(s, s + img.channels, out.px(x, y));
    }
  return out;
}

/// Binary PPM (P6) for RGB images, PGM (P5) for gray images.
inline std::string encode_pnm(const Image& img) {
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
  return out;
}

inline Image decode_pnm(const std::string& bytes, const std::string& name = "image") {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError(name + ": truncated PNM header");
    return bytes.substr(start, pos - start);
  };
  const auto magic = token();
  int channels = 0;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw FormatError(name + ": not a binary PPM/PGM file");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::logic_error&) {
    throw FormatError(name + ": malformed PNM header");
  }
  if (maxval != 255) throw FormatError(name + ": only 8-bit PNM images are supported");
  ++pos; // single whitespace after maxval
  Image img(w, h, channels);
  if (bytes.size() < pos + img.data.size()) throw FormatError(name + ": truncated PNM pixel data");
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
            bytes.begin() + static_cast<std::ptrdiff_t>(pos + img.data.size()), img.data.begin());
  return img;
}

inline void write_pnm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const auto bytes = encode_pnm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path);
}

inline Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes, path);
}

inline bool png_supported() {
#ifdef MRFVIZ_HAVE_PNG
  return true;
#else
  return false;
#endif
}

#ifdef MRFVIZ_HAVE_PNG

inline void write_png(const Image& img, const std::string& path) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.data.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path + ": " + pi.message);
}

/// Reads a PNG as RGB or gray (gray and palette-free gray-alpha files stay gray).
inline Image read_png(const std::string& path) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str())) throw IoError("cannot read PNG " + path + ": " + pi.message);
  const bool gray = (pi.format & PNG_FORMAT_FLAG_COLOR) == 0;
  pi.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image img(pi.width, pi.height, gray ? 1 : 3);
  if (!png_image_finish_read(&pi, nullptr, img.data.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw FormatError("cannot decode PNG " + path + ": " + pi.message);
  }
  return img;
}

#endif

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Writes PNM or, for a ".png" path, PNG.
inline void write_image(const Image& img, const std::string& path) {
  if (has_suffix(path, ".png")) {
#ifdef MRFVIZ_HAVE_PNG
    write_png(img, path);
    return;
#else
    throw ConfigError("this build has no PNG support: " + path);
#endif
  }
  write_pnm(img, path);
}

inline Image read_image(const std::string& path) {
  if (has_suffix(path, ".png")) {
#ifdef MRFVIZ_HAVE_PNG
    return read_png(path);
#else
    throw ConfigError("this build has no PNG support: " + path);
#endif
  }
  return read_pnm(path);
}

} // namespace mrfviz

#endif
