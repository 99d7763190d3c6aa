#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lov/memory.hpp"
#include "lov/parallel.hpp"

namespace lov {

/// Dense height x width x channels grid, row-major with channels innermost.
/// The scalar type is a parameter so kernels can run in float while
/// oracle and gradient checks run the same code in double.
template <typename T>
class FeatureMap {
 public:
  using value_type = T;

  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 0)
      throw std::invalid_argument("negative grid dimension");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& operator()(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::span<T> at(int y, int x) noexcept {
    return {data_.data() + index(y, x), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> at(int y, int x) const noexcept {
    return {data_.data() + index(y, x), static_cast<std::size_t>(channels_)};
  }

  std::span<T> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> values() const noexcept { return {data_.data(), data_.size()}; }

  bool same_shape(const FeatureMap& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  template <typename U>
  FeatureMap<U> cast() const {
    FeatureMap<U> out(height_, width_, channels_);
    std::transform(data_.begin(), data_.end(), out.values().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.same_shape(b) && std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  memory::TrackedVector<T> data_;
};

enum class FlowResolution { Feature, Full };

/// Per-pixel displacement (u rightward, v downward) in pixels of its own grid.
template <typename T>
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, FlowResolution res = FlowResolution::Feature, T u0 = T{},
            T v0 = T{})
      : height_(height), width_(width), resolution_(res) {
    if (height < 0 || width < 0) throw std::invalid_argument("negative grid dimension");
    u_.assign(static_cast<std::size_t>(height) * width, u0);
    v_.assign(static_cast<std::size_t>(height) * width, v0);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  FlowResolution resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return u_.size(); }

  T& u(int y, int x) noexcept { return u_[static_cast<std::size_t>(y) * width_ + x]; }
  T& v(int y, int x) noexcept { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  T u(int y, int x) const noexcept { return u_[static_cast<std::size_t>(y) * width_ + x]; }
  T v(int y, int x) const noexcept { return v_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<T> u_values() noexcept { return {u_.data(), u_.size()}; }
  std::span<T> v_values() noexcept { return {v_.data(), v_.size()}; }
  std::span<const T> u_values() const noexcept { return {u_.data(), u_.size()}; }
  std::span<const T> v_values() const noexcept { return {v_.data(), v_.size()}; }

  bool same_grid(const FlowField& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_;
  }

  template <typename U>
  FlowField<U> cast() const {
    FlowField<U> out(height_, width_, resolution_);
    for (std::size_t i = 0; i < u_.size(); ++i) {
      out.u_values()[i] = static_cast<U>(u_[i]);
      out.v_values()[i] = static_cast<U>(v_[i]);
    }
    return out;
  }

  friend bool operator==(const FlowField& a, const FlowField& b) {
    return a.same_grid(b) && a.u_ == b.u_ && a.v_ == b.v_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  FlowResolution resolution_ = FlowResolution::Feature;
  memory::TrackedVector<T> u_;
  memory::TrackedVector<T> v_;
};

/// Grayscale image with intensities in [0, 1].
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  float& operator()(int y, int x) noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float operator()(int y, int x) const noexcept {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// 2x2 block mean. Odd trailing rows/columns are dropped first.
template <typename T>
FeatureMap<T> avg_pool_2x2(const FeatureMap<T>& map) {
  const int h = map.height() / 2;
  const int w = map.width() / 2;
  if (map.empty() || h == 0 || w == 0) throw std::invalid_argument("empty grid");
  const int d = map.channels();
  FeatureMap<T> out(h, w, d);
  parallel_for(h, [&](std::int64_t begin, std::int64_t end) {
    for (int y = static_cast<int>(begin); y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        auto a = map.at(2 * y, 2 * x);
        auto b = map.at(2 * y, 2 * x + 1);
        auto c = map.at(2 * y + 1, 2 * x);
        auto e = map.at(2 * y + 1, 2 * x + 1);
        auto o = out.at(y, x);
        for (int k = 0; k < d; ++k) o[k] = (a[k] + b[k] + c[k] + e[k]) / T(4);
      }
    }
  });
  return out;
}

/// Four-corner interpolation stencil for a clamped fractional coordinate.
/// x_inside/y_inside are false when the coordinate was clamped, which zeroes
/// the positional derivative along that axis.
template <typename T>
struct BilinearTap {
  int x0, x1, y0, y1;
  T wx, wy;
  bool x_inside, y_inside;
};

template <typename T>
BilinearTap<T> bilinear_tap(int height, int width, T x, T y) noexcept {
  BilinearTap<T> t{};
  const T xmax = static_cast<T>(width - 1);
  const T ymax = static_cast<T>(height - 1);
  t.x_inside = x >= T(0) && x <= xmax;
  t.y_inside = y >= T(0) && y <= ymax;
  const T xc = std::clamp(x, T(0), xmax);
  const T yc = std::clamp(y, T(0), ymax);
  t.x0 = std::min(static_cast<int>(std::floor(xc)), width - 1);
  t.y0 = std::min(static_cast<int>(std::floor(yc)), height - 1);
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.wx = xc - static_cast<T>(t.x0);
  t.wy = yc - static_cast<T>(t.y0);
  return t;
}

/// Bilinear sample at column x, row y with replicate borders, written to out.
template <typename T>
void bilinear_sample_into(const FeatureMap<T>& map, T x, T y, std::span<T> out) noexcept {
  const auto t = bilinear_tap(map.height(), map.width(), x, y);
  auto a = map.at(t.y0, t.x0);
  auto b = map.at(t.y0, t.x1);
  auto c = map.at(t.y1, t.x0);
  auto d = map.at(t.y1, t.x1);
  for (int k = 0; k < map.channels(); ++k) {
    const T top = a[k] + t.wx * (b[k] - a[k]);
    const T bottom = c[k] + t.wx * (d[k] - c[k]);
    out[k] = top + t.wy * (bottom - top);
  }
}

template <typename T>
std::vector<T> bilinear_sample(const FeatureMap<T>& map, T x, T y) {
  std::vector<T> out(static_cast<std::size_t>(map.channels()));
  bilinear_sample_into(map, x, y, std::span<T>(out));
  return out;
}

/// Bilinear upsampling of a flow by an integer factor with half-pixel
/// centre alignment; displacements are multiplied by the factor.
template <typename T>
FlowField<T> upsample_flow(const FlowField<T>& flow, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
  const int h = flow.height() * factor;
  const int w = flow.width() * factor;
  FlowField<T> out(h, w, FlowResolution::Full);
  if (factor == 1) {
    std::copy(flow.u_values().begin(), flow.u_values().end(), out.u_values().begin());
    std::copy(flow.v_values().begin(), flow.v_values().end(), out.v_values().begin());
    return out;
  }
  const T s = static_cast<T>(factor);
  parallel_for(h, [&](std::int64_t begin, std::int64_t end) {
    for (int y = static_cast<int>(begin); y < end; ++y) {
      const T sy = (static_cast<T>(y) + T(0.5)) / s - T(0.5);
      for (int x = 0; x < w; ++x) {
        const T sx = (static_cast<T>(x) + T(0.5)) / s - T(0.5);
        const auto t = bilinear_tap(flow.height(), flow.width(), sx, sy);
        auto lerp2 = [&](auto&& at) {
          const T top = at(t.y0, t.x0) + t.wx * (at(t.y0, t.x1) - at(t.y0, t.x0));
          const T bottom = at(t.y1, t.x0) + t.wx * (at(t.y1, t.x1) - at(t.y1, t.x0));
          return top + t.wy * (bottom - top);
        };
        out.u(y, x) = s * lerp2([&](int yy, int xx) { return flow.u(yy, xx); });
        out.v(y, x) = s * lerp2([&](int yy, int xx) { return flow.v(yy, xx); });
      }
    }
  });
  return out;
}

}  // namespace lov
