#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "lov/grid.hpp"

namespace lov {

struct FeatureConfig {
  int dim = 32;
  bool normalize = true;
  /// Box-blur radius (in 1/8 cells) applied to the pooled intensity before
  /// the descriptor is read from it. 0 keeps the raw pooled intensity.
  int blur_radius = 2;
  /// Spacing (in 1/8 cells) between the 5x5 patch taps.
  int patch_stride = 2;
};

/// Number of informative descriptor channels: intensity, Sobel x/y, and a
/// 5x5 intensity patch.
inline constexpr int kDescriptorChannels = 28;

/// Target features at 1/8, 1/16 and 1/32 input resolution.
template <typename T>
struct FeaturePyramid {
  std::array<FeatureMap<T>, 3> levels;

  const FeatureMap<T>& operator[](int level) const { return levels[static_cast<std::size_t>(level)]; }
  FeatureMap<T>& operator[](int level) { return levels[static_cast<std::size_t>(level)]; }
};

namespace detail {

template <typename T>
T replicate(const FeatureMap<T>& m, int y, int x) {
  return m(std::clamp(y, 0, m.height() - 1), std::clamp(x, 0, m.width() - 1), 0);
}

/// Single-channel box mean over a (2r+1)^2 window with replicate borders.
template <typename T>
FeatureMap<T> box_blur(const FeatureMap<T>& m, int r) {
  FeatureMap<T> out(m.height(), m.width(), 1);
  const T area = static_cast<T>((2 * r + 1) * (2 * r + 1));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      T s = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) s += replicate(m, y + dy, x + dx);
      out(y, x, 0) = s / area;
    }
  return out;
}

}  // namespace detail

/// Training-free 1/8-resolution descriptors.
///
/// The image is 8x average-pooled and box-blurred by config.blur_radius
/// cells. Each cell then holds that intensity, its Sobel gradient pair
/// (scaled by 1/8) and a 5x5 patch with taps config.patch_stride cells
/// apart (row-major, replicate border), zero-padded or truncated to
/// config.dim. With normalization on,
/// channels are centred by their global mean and every descriptor is scaled
/// to unit L2 norm; descriptors with zero norm stay zero.
template <typename T>
FeatureMap<T> extract_features(const GrayImage& image, const FeatureConfig& config = {}) {
  if (image.height < 32 || image.width < 32) throw std::invalid_argument("image too small");
  if (image.height % 32 != 0 || image.width % 32 != 0)
    throw std::invalid_argument("image dimensions must be multiples of 32");
  if (config.dim < 1) throw std::invalid_argument("descriptor dimension must be positive");
  if (config.blur_radius < 0 || config.patch_stride < 1)
    throw std::invalid_argument("invalid descriptor blur or stride");

  FeatureMap<T> pooled(image.height, image.width, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) pooled(y, x, 0) = static_cast<T>(image(y, x));
  for (int i = 0; i < 3; ++i) pooled = avg_pool_2x2(pooled);

  if (config.blur_radius > 0) pooled = detail::box_blur(pooled, config.blur_radius);
  const int h = pooled.height();
  const int w = pooled.width();
  const int dim = config.dim;
  const int used = std::min(dim, kDescriptorChannels);
  const int stride = config.patch_stride;
  FeatureMap<T> out(h, w, dim);

  parallel_for(h, [&](std::int64_t begin, std::int64_t end) {
    std::array<T, kDescriptorChannels> desc{};
    for (int y = static_cast<int>(begin); y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        auto p = [&](int dy, int dx) { return detail::replicate(pooled, y + dy, x + dx); };
        desc[0] = p(0, 0);
        desc[1] = ((p(-1, 1) + T(2) * p(0, 1) + p(1, 1)) - (p(-1, -1) + T(2) * p(0, -1) + p(1, -1))) / T(8);
        desc[2] = ((p(1, -1) + T(2) * p(1, 0) + p(1, 1)) - (p(-1, -1) + T(2) * p(-1, 0) + p(-1, 1))) / T(8);
        int k = 3;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) desc[k++] = p(dy * stride, dx * stride);
        auto o = out.at(y, x);
        for (int c = 0; c < used; ++c) o[c] = desc[c];
      }
    }
  });

  if (!config.normalize) return out;

  // Channel means are accumulated in a fixed order so results do not depend
  // on the thread count.
  std::vector<long double> mean(static_cast<std::size_t>(dim), 0.0L);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto v = out.at(y, x);
      for (int c = 0; c < dim; ++c) mean[c] += static_cast<long double>(v[c]);
    }
  for (auto& m : mean) m /= static_cast<long double>(h) * w;

  const T zero_norm = std::is_same_v<T, float> ? T(1e-6) : T(1e-12);
  parallel_for(h, [&](std::int64_t begin, std::int64_t end) {
    for (int y = static_cast<int>(begin); y < end; ++y)
      for (int x = 0; x < w; ++x) {
        auto v = out.at(y, x);
        T norm2 = 0;
        for (int c = 0; c < dim; ++c) {
          v[c] = static_cast<T>(static_cast<long double>(v[c]) - mean[c]);
          norm2 += v[c] * v[c];
        }
        const T norm = std::sqrt(norm2);
        if (norm <= zero_norm) {
          std::fill(v.begin(), v.end(), T(0));
        } else {
          for (int c = 0; c < dim; ++c) v[c] /= norm;
        }
      }
  });
  return out;
}

template <typename T>
FeaturePyramid<T> build_pyramid(const FeatureMap<T>& level0) {
  if (level0.empty() || level0.height() % 4 != 0 || level0.width() % 4 != 0)
    throw std::invalid_argument("pyramid base dimensions must be positive multiples of 4");
  FeaturePyramid<T> p;
  p.levels[0] = level0;
  p.levels[1] = avg_pool_2x2(level0);
  p.levels[2] = avg_pool_2x2(p.levels[1]);
  return p;
}

}  // namespace lov
