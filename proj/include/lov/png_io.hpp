#pragma once

// Requires linking libpng.

#include <png.h>

#include <string>
#include <vector>

#include "lov/io.hpp"

namespace lov {

inline bool is_png(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

/// Decodes any PNG to 8-bit grayscale (colour via luma, alpha dropped).
inline GrayImage read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError(path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(path + ": " + image.message);
  }
  GrayImage img(static_cast<int>(image.height), static_cast<int>(image.width));
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
  return img;
}

inline void write_png(const RgbImage& img, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr))
    throw IoError(path + ": " + image.message);
}

/// Reads PNG, PGM (P5) or PPM (P6) by content.
inline GrayImage read_image(const std::string& path) {
  const auto bytes = detail::read_file(path);
  if (is_png(bytes)) return read_png(path);
  try {
    return decode_pnm(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace lov
