#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "lov/attention.hpp"
#include "lov/costvolume.hpp"
#include "lov/features.hpp"
#include "lov/grid.hpp"

namespace lov {

struct SolverConfig {
  int iterations = 24;
  double beta = 400.0;
  double alpha = 0.8;
  LookupSchedule schedule = LookupSchedule::radius_distribution();
  AttentionConfig attention{};
  FeatureConfig features{};
  int upsample = 8;
  /// Spatial window (in 1/8 cells) over which costs and flow are averaged
  /// before each update; 0 gives the plain per-pixel update.
  int aggregation_radius = 16;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
    if (upsample < 1) throw std::invalid_argument("upsample factor must be >= 1");
    if (aggregation_radius < 0) throw std::invalid_argument("aggregation radius must be >= 0");
    schedule.validate();
    attention.validate();
  }
};

template <typename T>
using FlowSequence = std::vector<FlowField<T>>;

/// Damped soft-argmax over the offset bins of each axis:
/// du = alpha * sum_r softmax(beta * c_h)(r) * r, dv likewise over c_v.
template <typename T>
FlowField<T> soft_argmax_update(const OrthogonalCostVolume<T>& cost, double beta, double alpha) {
  const int h = cost.height();
  const int w = cost.width();
  const int nb = cost.bins();
  FlowField<T> delta(h, w, FlowResolution::Feature);
  const T b = static_cast<T>(beta);
  const T a = static_cast<T>(alpha);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> weights(static_cast<std::size_t>(nb));
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      for (int axis_block = 0; axis_block < 2; ++axis_block) {
        T peak = -std::numeric_limits<T>::infinity();
        for (int k = 0; k < nb; ++k) {
          weights[k] = b * cost.data(axis_block * nb + k, y, x);
          peak = std::max(peak, weights[k]);
        }
        T total = 0;
        for (auto& v : weights) {
          v = std::exp(v - peak);
          total += v;
        }
        // Pair symmetric offsets so an odd-symmetric cost gives exactly zero.
        T moment = 0;
        for (int k = 0; k < nb / 2; ++k)
          moment += weights[nb - 1 - k] * static_cast<T>(cost.offsets[nb - 1 - k]) +
                    weights[k] * static_cast<T>(cost.offsets[k]);
        if (nb % 2) moment += weights[nb / 2] * static_cast<T>(cost.offsets[nb / 2]);
        const T step = a * moment / total;
        if (axis_block == 0)
          delta.u(y, x) = step;
        else
          delta.v(y, x) = step;
      }
    }
  });
  return delta;
}

/// Spatial box mean of every cost channel over a (2r+1)^2 window, with the
/// window truncated at the borders.
template <typename T>
OrthogonalCostVolume<T> aggregate_cost(const OrthogonalCostVolume<T>& cost, int radius) {
  const int h = cost.height();
  const int w = cost.width();
  const int channels = cost.data.channels();
  OrthogonalCostVolume<T> out{cost.offsets, CostTensor<T>(channels, h, w)};
  parallel_for(channels, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> rows(static_cast<std::size_t>(h) * w);
    for (int c = static_cast<int>(begin); c < end; ++c) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T s = 0;
          const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
          for (int k = x0; k <= x1; ++k) s += cost.data(c, y, k);
          rows[static_cast<std::size_t>(y) * w + x] = s / static_cast<T>(x1 - x0 + 1);
        }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T s = 0;
          const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
          for (int k = y0; k <= y1; ++k) s += rows[static_cast<std::size_t>(k) * w + x];
          out.data(c, y, x) = s / static_cast<T>(y1 - y0 + 1);
        }
    }
  });
  return out;
}

template <typename T>
FlowField<T> aggregate_flow(const FlowField<T>& flow, int radius) {
  OrthogonalCostVolume<T> packed{{}, CostTensor<T>(2, flow.height(), flow.width())};
  std::copy(flow.u_values().begin(), flow.u_values().end(), packed.data.values().begin());
  std::copy(flow.v_values().begin(), flow.v_values().end(), packed.data.values().begin() + flow.size());
  const auto smoothed = aggregate_cost(packed, radius);
  FlowField<T> out(flow.height(), flow.width(), flow.resolution());
  std::copy_n(smoothed.data.values().begin(), flow.size(), out.u_values().begin());
  std::copy_n(smoothed.data.values().begin() + flow.size(), flow.size(), out.v_values().begin());
  return out;
}

/// Iterative flow estimate between two images of equal size (multiples of 32).
///
/// The target pyramid is attended once. Each iteration builds the LOV at the
/// current 1/8 flow and applies the soft-argmax step. With a positive
/// aggregation radius the cost channels are box-averaged first, and the step
/// is added to the equally averaged flow: averaged bins measure offsets
/// relative to the neighbourhood's flow, so adding them to the raw flow
/// would amplify differences between neighbours.
/// Returns the final full-resolution flow; the per-iteration upsampled flows
/// are appended to sequence when it is non-null.
template <typename T>
FlowField<T> estimate_flow(const GrayImage& source, const GrayImage& target, const SolverConfig& config,
                           FlowSequence<T>* sequence = nullptr) {
  config.validate();
  if (source.height != target.height || source.width != target.width)
    throw std::invalid_argument("source and target sizes differ");
  const auto fs = extract_features<T>(source, config.features);
  const auto ft = extract_features<T>(target, config.features);
  const auto pyramid = build_pyramid(ft);
  const auto attended = attend_pyramid(pyramid, config.attention);

  FlowField<T> flow(fs.height(), fs.width(), FlowResolution::Feature);
  for (int it = 0; it < config.iterations; ++it) {
    auto cost = build_lov(fs, attended, flow, config.schedule);
    if (config.aggregation_radius > 0) cost = aggregate_cost(cost, config.aggregation_radius);
    const auto delta = soft_argmax_update(cost, config.beta, config.alpha);
    if (config.aggregation_radius > 0) flow = aggregate_flow(flow, config.aggregation_radius);
    auto u = flow.u_values();
    auto v = flow.v_values();
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += delta.u_values()[i];
      v[i] += delta.v_values()[i];
    }
    if (sequence) sequence->push_back(upsample_flow(flow, config.upsample));
  }
  return upsample_flow(flow, config.upsample);
}

/// sum_i gamma^(N-i) * mean_pixels(|u_i - u_gt| + |v_i - v_gt|).
template <typename T>
double sequence_loss(const FlowSequence<T>& sequence, const FlowField<T>& gt, double gamma = 0.8) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  const std::size_t n = sequence.size();
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = sequence[i];
    if (!f.same_grid(gt)) throw std::invalid_argument("flow grid mismatch");
    if (gt.size() == 0) continue;
    double l1 = 0;
    for (std::size_t p = 0; p < gt.size(); ++p)
      l1 += std::abs(static_cast<double>(f.u_values()[p]) - static_cast<double>(gt.u_values()[p])) +
            std::abs(static_cast<double>(f.v_values()[p]) - static_cast<double>(gt.v_values()[p]));
    loss += std::pow(gamma, static_cast<double>(n - 1 - i)) * l1 / static_cast<double>(gt.size());
  }
  return loss;
}

struct EvalReport {
  double epe = 0;
  double f1_all = 0;
  double epe_0_10 = 0;
  double epe_10_40 = 0;
  std::size_t count_0_10 = 0;
  std::size_t count_10_40 = 0;
  std::size_t valid = 0;
};

/// End-point error, outlier percentage (error > 3 px and > 5% of the
/// ground-truth magnitude) and EPE over ground-truth magnitudes [0,10) and
/// [10,40). Range EPEs are 0 when the range has no pixels. An empty mask
/// means every pixel is valid.
template <typename T>
EvalReport evaluate(const FlowField<T>& flow, const FlowField<T>& gt, const std::vector<std::uint8_t>& valid = {}) {
  if (!flow.same_grid(gt)) throw std::invalid_argument("flow grid mismatch");
  if (!valid.empty() && valid.size() != gt.size()) throw std::invalid_argument("valid mask size mismatch");
  EvalReport r;
  double sum = 0, sum_a = 0, sum_b = 0;
  std::size_t outliers = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (!valid.empty() && !valid[p]) continue;
    const double du = static_cast<double>(flow.u_values()[p]) - static_cast<double>(gt.u_values()[p]);
    const double dv = static_cast<double>(flow.v_values()[p]) - static_cast<double>(gt.v_values()[p]);
    const double err = std::sqrt(du * du + dv * dv);
    const double gu = gt.u_values()[p];
    const double gv = gt.v_values()[p];
    const double mag = std::sqrt(gu * gu + gv * gv);
    sum += err;
    ++r.valid;
    if (err > 3.0 && err > 0.05 * mag) ++outliers;
    if (mag < 10.0) {
      sum_a += err;
      ++r.count_0_10;
    } else if (mag < 40.0) {
      sum_b += err;
      ++r.count_10_40;
    }
  }
  if (r.valid == 0) throw std::invalid_argument("no valid pixels");
  r.epe = sum / static_cast<double>(r.valid);
  r.f1_all = 100.0 * static_cast<double>(outliers) / static_cast<double>(r.valid);
  r.epe_0_10 = r.count_0_10 ? sum_a / static_cast<double>(r.count_0_10) : 0.0;
  r.epe_10_40 = r.count_10_40 ? sum_b / static_cast<double>(r.count_10_40) : 0.0;
  return r;
}

/// Mask that drops a band of `margin` pixels along every border.
inline std::vector<std::uint8_t> interior_mask(int height, int width, int margin) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(height) * width, 0);
  for (int y = margin; y < height - margin; ++y)
    for (int x = margin; x < width - margin; ++x) m[static_cast<std::size_t>(y) * width + x] = 1;
  return m;
}

struct TextureSpec {
  std::uint64_t seed = 0;
  int smoothing_radius = 2;
};

struct Translation {
  double dx = 0;
  double dy = 0;
};

/// x' = m[0] x + m[1] y + m[2], y' = m[3] x + m[4] y + m[5].
struct Affine {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};

  static Affine rotation_about(double degrees, double cx, double cy) {
    const double t = degrees * std::acos(-1.0) / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    return {{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy}};
  }
};

using Warp = std::variant<Translation, Affine>;

struct SyntheticPair {
  GrayImage source;
  GrayImage target;
  FlowField<double> gt;
  std::vector<std::uint8_t> valid;
};

/// Box-filtered uniform noise stretched to [0, 1].
inline GrayImage make_texture(const TextureSpec& spec, int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("empty grid");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> noise(static_cast<std::size_t>(height) * width);
  for (auto& v : noise) v = uni(rng);
  const int r = std::max(0, spec.smoothing_radius);
  auto at = [&](int y, int x) {
    return noise[static_cast<std::size_t>(std::clamp(y, 0, height - 1)) * width + std::clamp(x, 0, width - 1)];
  };
  // Separable box filter with replicate borders.
  std::vector<double> tmp(noise.size()), box(noise.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0;
      for (int k = -r; k <= r; ++k) s += at(y, x + k);
      tmp[static_cast<std::size_t>(y) * width + x] = s;
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0;
      for (int k = -r; k <= r; ++k)
        s += tmp[static_cast<std::size_t>(std::clamp(y + k, 0, height - 1)) * width + x];
      box[static_cast<std::size_t>(y) * width + x] = s;
    }
  const auto [lo, hi] = std::minmax_element(box.begin(), box.end());
  const double range = *hi - *lo;
  GrayImage img(height, width);
  for (std::size_t i = 0; i < box.size(); ++i)
    img.pixels[i] = range > 0 ? static_cast<float>((box[i] - *lo) / range) : 0.5f;
  return img;
}

/// Source texture and its warp. gt(p) = warp(p) - p; the target is the
/// source resampled bilinearly through the inverse warp with replicate
/// borders; valid marks pixels whose warped position stays in frame.
inline SyntheticPair make_synthetic_pair(const TextureSpec& texture, const Warp& warp, int height, int width) {
  Affine a;
  if (const auto* t = std::get_if<Translation>(&warp)) {
    a.m = {1, 0, t->dx, 0, 1, t->dy};
  } else {
    a = std::get<Affine>(warp);
  }
  const auto& m = a.m;
  const double det = m[0] * m[4] - m[1] * m[3];
  if (!(det > 0.0)) throw std::invalid_argument("degenerate affine warp");

  SyntheticPair pair;
  pair.source = make_texture(texture, height, width);
  pair.target = GrayImage(height, width);
  pair.gt = FlowField<double>(height, width, FlowResolution::Full);
  pair.valid.assign(static_cast<std::size_t>(height) * width, 0);

  FeatureMap<double> src(height, width, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) src(y, x, 0) = pair.source(y, x);

  // Inverse warp: p = A^-1 (q - t).
  const double i00 = m[4] / det, i01 = -m[1] / det, i10 = -m[3] / det, i11 = m[0] / det;
  std::size_t inside = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double qx = x - m[2], qy = y - m[5];
      const double sx = i00 * qx + i01 * qy;
      const double sy = i10 * qx + i11 * qy;
      double value = 0;
      bilinear_sample_into(src, sx, sy, std::span<double>(&value, 1));
      pair.target(y, x) = static_cast<float>(value);

      const double wx = m[0] * x + m[1] * y + m[2];
      const double wy = m[3] * x + m[4] * y + m[5];
      pair.gt.u(y, x) = wx - x;
      pair.gt.v(y, x) = wy - y;
      const bool in = wx >= 0 && wx <= width - 1 && wy >= 0 && wy <= height - 1;
      pair.valid[static_cast<std::size_t>(y) * width + x] = in;
      inside += in;
    }
  if (inside * 4 < pair.valid.size()) throw std::invalid_argument("warp keeps fewer than 25% of pixels in frame");
  return pair;
}

}  // namespace lov
