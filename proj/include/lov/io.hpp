#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "lov/grid.hpp"

namespace lov {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr float kFloMagic = 202021.25f;

namespace detail {

inline void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path);
}

}  // namespace detail

/// Middlebury .flo bytes: magic, width, height (little-endian int32), then
/// interleaved (u, v) float32 little-endian, row-major.
inline std::vector<unsigned char> encode_flo(const FlowField<float>& flow) {
  std::vector<unsigned char> out;
  out.reserve(12 + flow.size() * 8);
  detail::put_u32_le(out, std::bit_cast<std::uint32_t>(kFloMagic));
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    detail::put_u32_le(out, std::bit_cast<std::uint32_t>(flow.u_values()[i]));
    detail::put_u32_le(out, std::bit_cast<std::uint32_t>(flow.v_values()[i]));
  }
  return out;
}

inline FlowField<float> decode_flo(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12) throw IoError("truncated .flo header");
  if (std::bit_cast<float>(detail::get_u32_le(bytes.data())) != kFloMagic) throw IoError("invalid magic");
  const auto w = static_cast<std::int32_t>(detail::get_u32_le(bytes.data() + 4));
  const auto h = static_cast<std::int32_t>(detail::get_u32_le(bytes.data() + 8));
  if (w < 0 || h < 0) throw IoError("invalid .flo dimensions");
  const std::uint64_t expected = 12 + static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h) * 8;
  if (bytes.size() < expected) throw IoError("truncated payload");
  if (bytes.size() > expected) throw IoError("payload longer than declared dimensions");
  FlowField<float> flow(h, w, FlowResolution::Full);
  const unsigned char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < flow.size(); ++i, p += 8) {
    flow.u_values()[i] = std::bit_cast<float>(detail::get_u32_le(p));
    flow.v_values()[i] = std::bit_cast<float>(detail::get_u32_le(p + 4));
  }
  return flow;
}

inline void write_flo(const FlowField<float>& flow, const std::string& path) {
  detail::write_file(path, encode_flo(flow));
}

inline FlowField<float> read_flo(const std::string& path) {
  try {
    return decode_flo(detail::read_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

/// 8-bit RGB image, row-major interleaved.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t* at(int y, int x) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int y, int x) const { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

inline float luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
}

/// Binary PGM (P5) or PPM (P6) with maxval 255; RGB is reduced to luma.
inline GrayImage decode_pnm(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError("malformed PNM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1L << 24)) throw IoError("PNM dimension too large");
    }
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IoError("not a binary PGM/PPM file");
  const bool rgb = bytes[1] == '6';
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw IoError("only 8-bit PNM is supported");
  ++pos;  // single whitespace before the raster
  const std::size_t channels = rgb ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() < pos + need) throw IoError("truncated PNM raster");
  GrayImage img(h, w);
  const unsigned char* p = bytes.data() + pos;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = rgb ? luma(p[3 * i], p[3 * i + 1], p[3 * i + 2]) : p[i] / 255.0f;
  }
  return img;
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  for (float v : img.pixels)
    out.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return out;
}

inline std::vector<unsigned char> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

/// Drops trailing rows/columns so both sides are multiples of `multiple`.
inline GrayImage crop_to_multiple(const GrayImage& img, int multiple) {
  const int h = img.height / multiple * multiple;
  const int w = img.width / multiple * multiple;
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = img(y, x);
  return out;
}

}  // namespace lov
