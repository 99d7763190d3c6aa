#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "lov/grid.hpp"
#include "lov/io.hpp"

namespace lov {

/// Middlebury colour wheel: 55 RGB entries through red, yellow, green,
/// cyan, blue and magenta.
inline std::vector<std::array<int, 3>> color_wheel() {
  constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  std::vector<std::array<int, 3>> wheel;
  wheel.reserve(RY + YG + GC + CB + BM + MR);
  for (int i = 0; i < RY; ++i) wheel.push_back({255, 255 * i / RY, 0});
  for (int i = 0; i < YG; ++i) wheel.push_back({255 - 255 * i / YG, 255, 0});
  for (int i = 0; i < GC; ++i) wheel.push_back({0, 255, 255 * i / GC});
  for (int i = 0; i < CB; ++i) wheel.push_back({0, 255 - 255 * i / CB, 255});
  for (int i = 0; i < BM; ++i) wheel.push_back({255 * i / BM, 0, 255});
  for (int i = 0; i < MR; ++i) wheel.push_back({255, 0, 255 - 255 * i / MR});
  return wheel;
}

/// Fractional wheel position in [0, 54] for a flow direction.
inline double wheel_position(double u, double v) {
  const double angle = std::atan2(-v, -u) / std::acos(-1.0);
  return (angle + 1.0) / 2.0 * 54.0;
}

/// Colour-codes a flow: hue from direction, saturation from magnitude
/// relative to max_magnitude (default: 99th percentile of magnitudes).
/// Magnitudes beyond the maximum are darkened; zero flow is white.
template <typename T>
RgbImage visualize_flow(const FlowField<T>& flow, std::optional<double> max_magnitude = std::nullopt) {
  RgbImage out(flow.height(), flow.width());
  const auto wheel = color_wheel();
  const int ncols = static_cast<int>(wheel.size());

  double maxmag = 0;
  if (max_magnitude) {
    maxmag = *max_magnitude;
  } else if (flow.size() > 0) {
    std::vector<double> mags(flow.size());
    for (std::size_t i = 0; i < flow.size(); ++i)
      mags[i] = std::hypot(static_cast<double>(flow.u_values()[i]), static_cast<double>(flow.v_values()[i]));
    const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(mags.size()))) - 1;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
    maxmag = mags[k];
  }

  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      const double u = flow.u(y, x);
      const double v = flow.v(y, x);
      const double mag = std::hypot(u, v);
      const double rad = maxmag > 0 ? mag / maxmag : 0.0;
      const double fk = wheel_position(u, v);
      const int k0 = std::clamp(static_cast<int>(fk), 0, ncols - 1);
      const int k1 = (k0 + 1) % ncols;
      const double f = fk - k0;
      auto* px = out.at(y, x);
      for (int c = 0; c < 3; ++c) {
        double col = ((1 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        if (rad <= 1)
          col = 1 - rad * (1 - col);
        else
          col *= 0.75;
        px[c] = static_cast<std::uint8_t>(255.0 * col);
      }
    }
  return out;
}

}  // namespace lov
