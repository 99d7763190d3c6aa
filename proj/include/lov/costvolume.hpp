#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lov/attention.hpp"
#include "lov/features.hpp"
#include "lov/grid.hpp"

namespace lov {

/// Offsets (in level-0 cells) sampled from one pyramid level.
struct LookupLevel {
  int level = 0;
  int divisor = 1;
  std::vector<int> offsets;
};

/// One cost-volume bin: full-scale offset and where it is sampled from.
struct LookupBin {
  int offset;
  int level;
  int divisor;
};

/// Radius-distribution lookup table: small offsets read the fine level,
/// large offsets read coarser levels, so 2R+1 bins reach far at a fixed
/// bin count.
struct LookupSchedule {
  std::vector<LookupLevel> entries;

  /// Level 0: -4..4, level 1: +-6, +-8, level 2: +-12, +-16 (R = 8, 17 bins).
  static LookupSchedule radius_distribution() {
    return {{{0, 1, {-4, -3, -2, -1, 0, 1, 2, 3, 4}}, {1, 2, {-8, -6, 6, 8}}, {2, 4, {-16, -12, 12, 16}}}};
  }

  /// Level 0 only, -4..4 (R = 4). Used to show the reach that coarse levels add.
  static LookupSchedule level0_only() { return {{{0, 1, {-4, -3, -2, -1, 0, 1, 2, 3, 4}}}}; }

  static LookupSchedule from_name(const std::string& name) {
    if (name == "default") return radius_distribution();
    if (name == "level0-only") return level0_only();
    throw std::invalid_argument("unknown radius schedule: " + name);
  }

  void validate() const {
    std::multiset<int> all;
    for (const auto& e : entries) {
      if (e.level < 0 || e.level > 2) throw std::invalid_argument("lookup level must be 0, 1 or 2");
      if (e.divisor != (1 << e.level)) throw std::invalid_argument("lookup divisor must be 2^level");
      all.insert(e.offsets.begin(), e.offsets.end());
    }
    if (all.empty()) throw std::invalid_argument("empty lookup schedule");
    if (all.count(0) != 1) throw std::invalid_argument("lookup schedule needs exactly one zero offset");
    if (std::set<int>(all.begin(), all.end()).size() != all.size())
      throw std::invalid_argument("duplicate lookup offset");
    for (int o : all)
      if (all.count(-o) != 1) throw std::invalid_argument("lookup offsets must be symmetric");
  }

  /// Bins sorted by ascending offset.
  std::vector<LookupBin> bins() const {
    std::vector<LookupBin> out;
    for (const auto& e : entries)
      for (int o : e.offsets) out.push_back({o, e.level, e.divisor});
    std::sort(out.begin(), out.end(), [](const LookupBin& a, const LookupBin& b) { return a.offset < b.offset; });
    return out;
  }

  int bin_count() const {
    int n = 0;
    for (const auto& e : entries) n += static_cast<int>(e.offsets.size());
    return n;
  }

  int radius() const { return (bin_count() - 1) / 2; }

  int max_offset() const {
    int m = 0;
    for (const auto& e : entries)
      for (int o : e.offsets) m = std::max(m, std::abs(o));
    return m;
  }
};

/// Channel-major cost tensor: channels x height x width.
template <typename T>
class CostTensor {
 public:
  CostTensor() = default;
  CostTensor(int channels, int height, int width)
      : channels_(channels), height_(height), width_(width) {
    data_.assign(static_cast<std::size_t>(channels) * height * width, T(0));
  }

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }
  T& operator()(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  T operator()(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

  std::span<T> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> values() const noexcept { return {data_.data(), data_.size()}; }

  friend bool operator==(const CostTensor& a, const CostTensor& b) {
    return a.channels_ == b.channels_ && a.height_ == b.height_ && a.width_ == b.width_ &&
           a.data_ == b.data_;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  memory::TrackedVector<T> data_;
};

/// (4R+2) x H x W: horizontal bins by ascending offset, then vertical bins.
template <typename T>
struct OrthogonalCostVolume {
  std::vector<int> offsets;
  CostTensor<T> data;

  int bins() const noexcept { return static_cast<int>(offsets.size()); }
  int height() const noexcept { return data.height(); }
  int width() const noexcept { return data.width(); }
  T horizontal(int bin, int y, int x) const noexcept { return data(bin, y, x); }
  T vertical(int bin, int y, int x) const noexcept { return data(bins() + bin, y, x); }
};

namespace detail {

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Sampling position of one bin in level coordinates (x, y).
template <typename T>
std::pair<T, T> lov_coord(Axis corr_axis, const LookupBin& bin, T ty, T tx) {
  const T s = static_cast<T>(bin.divisor);
  const T r = static_cast<T>(bin.offset);
  if (corr_axis == Axis::Horizontal) return {(tx + r) / s, ty / s};
  return {tx / s, (ty + r) / s};
}

template <typename T>
void check_lov_inputs(const FeatureMap<T>& source, const AttendedPyramid<T>& attended,
                      const FlowField<T>& flow) {
  if (source.empty()) throw std::invalid_argument("empty grid");
  if (flow.height() != source.height() || flow.width() != source.width())
    throw std::invalid_argument("flow grid does not match source features");
  for (int level = 0; level < 3; ++level)
    for (Axis a : {Axis::Vertical, Axis::Horizontal})
      if (!attended.get(a, level).empty() && attended.get(a, level).channels() != source.channels())
        throw std::invalid_argument("attended feature dimension does not match source");
  if (attended.vertical[0].height() != source.height() || attended.vertical[0].width() != source.width())
    throw std::invalid_argument("attended level 0 grid does not match source features");
}

}  // namespace detail

/// Local orthogonal cost volume at the current flow.
///
/// Horizontal bins correlate the source with the vertically attended map of
/// the bin's level, sampled at ((h+fy)/s, (w+fx+r)/s); vertical bins use the
/// horizontally attended map at ((h+fy+r)/s, (w+fx)/s). Values are scaled by
/// 1/sqrt(D).
template <typename T>
OrthogonalCostVolume<T> build_lov(const FeatureMap<T>& source, const AttendedPyramid<T>& attended,
                                  const FlowField<T>& flow, const LookupSchedule& schedule) {
  schedule.validate();
  detail::check_lov_inputs(source, attended, flow);
  const auto bins = schedule.bins();
  const int nb = static_cast<int>(bins.size());
  const int h = source.height();
  const int w = source.width();
  const int d = source.channels();
  const T scale = T(1) / std::sqrt(static_cast<T>(d));

  OrthogonalCostVolume<T> cv;
  for (const auto& b : bins) cv.offsets.push_back(b.offset);
  cv.data = CostTensor<T>(2 * nb, h, w);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> sample(static_cast<std::size_t>(d));
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const T ty = static_cast<T>(y) + flow.v(y, x);
      const T tx = static_cast<T>(x) + flow.u(y, x);
      auto src = source.at(y, x);
      for (int axis_block = 0; axis_block < 2; ++axis_block) {
        const Axis corr = axis_block == 0 ? Axis::Horizontal : Axis::Vertical;
        const Axis attn = axis_block == 0 ? Axis::Vertical : Axis::Horizontal;
        for (int k = 0; k < nb; ++k) {
          const auto [sx, sy] = detail::lov_coord(corr, bins[k], ty, tx);
          bilinear_sample_into(attended.get(attn, bins[k].level), sx, sy, std::span<T>(sample));
          cv.data(axis_block * nb + k, y, x) =
              detail::dot<T>(src, std::span<const T>(sample)) * scale;
        }
      }
    }
  });
  return cv;
}

template <typename T>
struct LovGradients {
  FeatureMap<T> source;
  AttendedPyramid<T> attended;
  FlowField<T> flow;
};

/// Gradients of <upstream, build_lov(...)> with respect to the source
/// features, every attended map, and the flow. Positional derivatives of
/// the sampler are right-hand at lattice points and zero where clamped.
template <typename T>
LovGradients<T> lov_backward(const FeatureMap<T>& source, const AttendedPyramid<T>& attended,
                             const FlowField<T>& flow, const LookupSchedule& schedule,
                             const CostTensor<T>& upstream) {
  schedule.validate();
  detail::check_lov_inputs(source, attended, flow);
  const auto bins = schedule.bins();
  const int nb = static_cast<int>(bins.size());
  const int h = source.height();
  const int w = source.width();
  const int d = source.channels();
  if (upstream.channels() != 2 * nb || upstream.height() != h || upstream.width() != w)
    throw std::invalid_argument("upstream gradient shape mismatch");
  const T scale = T(1) / std::sqrt(static_cast<T>(d));

  LovGradients<T> g;
  g.source = FeatureMap<T>(h, w, d);
  g.flow = FlowField<T>(h, w, flow.resolution());
  for (int level = 0; level < 3; ++level)
    for (Axis a : {Axis::Vertical, Axis::Horizontal}) {
      const auto& m = attended.get(a, level);
      g.attended.get(a, level) = FeatureMap<T>(m.height(), m.width(), m.channels());
    }

  // Source and flow gradients are per pixel.
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> sample(static_cast<std::size_t>(d));
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const T ty = static_cast<T>(y) + flow.v(y, x);
      const T tx = static_cast<T>(x) + flow.u(y, x);
      auto src = source.at(y, x);
      auto gs = g.source.at(y, x);
      T gu = 0;
      T gv = 0;
      for (int axis_block = 0; axis_block < 2; ++axis_block) {
        const Axis corr = axis_block == 0 ? Axis::Horizontal : Axis::Vertical;
        const Axis attn = axis_block == 0 ? Axis::Vertical : Axis::Horizontal;
        for (int k = 0; k < nb; ++k) {
          const T up = upstream(axis_block * nb + k, y, x);
          if (up == T(0)) continue;
          const auto& map = attended.get(attn, bins[k].level);
          const auto [sx, sy] = detail::lov_coord(corr, bins[k], ty, tx);
          bilinear_sample_into(map, sx, sy, std::span<T>(sample));
          for (int c = 0; c < d; ++c) gs[c] += up * scale * sample[c];

          const auto t = bilinear_tap(map.height(), map.width(), sx, sy);
          auto a = map.at(t.y0, t.x0);
          auto b = map.at(t.y0, t.x1);
          auto cc = map.at(t.y1, t.x0);
          auto e = map.at(t.y1, t.x1);
          T dsx = 0;
          T dsy = 0;
          for (int c = 0; c < d; ++c) {
            const T ddx = (T(1) - t.wy) * (b[c] - a[c]) + t.wy * (e[c] - cc[c]);
            const T ddy = (T(1) - t.wx) * (cc[c] - a[c]) + t.wx * (e[c] - b[c]);
            dsx += src[c] * ddx;
            dsy += src[c] * ddy;
          }
          const T inv_s = T(1) / static_cast<T>(bins[k].divisor);
          if (t.x_inside) gu += up * scale * dsx * inv_s;
          if (t.y_inside) gv += up * scale * dsy * inv_s;
        }
      }
      g.flow.u(y, x) = gu;
      g.flow.v(y, x) = gv;
    }
  });

  // The sampler transpose scatters into shared cells; a fixed sequential
  // order keeps the result independent of the thread count.
  std::vector<T> contrib(static_cast<std::size_t>(d));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const T ty = static_cast<T>(y) + flow.v(y, x);
      const T tx = static_cast<T>(x) + flow.u(y, x);
      auto src = source.at(y, x);
      for (int axis_block = 0; axis_block < 2; ++axis_block) {
        const Axis corr = axis_block == 0 ? Axis::Horizontal : Axis::Vertical;
        const Axis attn = axis_block == 0 ? Axis::Vertical : Axis::Horizontal;
        for (int k = 0; k < nb; ++k) {
          const T up = upstream(axis_block * nb + k, y, x);
          if (up == T(0)) continue;
          auto& gm = g.attended.get(attn, bins[k].level);
          const auto [sx, sy] = detail::lov_coord(corr, bins[k], ty, tx);
          const auto t = bilinear_tap(gm.height(), gm.width(), sx, sy);
          const T w00 = (T(1) - t.wx) * (T(1) - t.wy);
          const T w01 = t.wx * (T(1) - t.wy);
          const T w10 = (T(1) - t.wx) * t.wy;
          const T w11 = t.wx * t.wy;
          for (int c = 0; c < d; ++c) contrib[c] = up * scale * src[c];
          auto add = [&](int yy, int xx, T wgt) {
            auto cell = gm.at(yy, xx);
            for (int c = 0; c < d; ++c) cell[c] += wgt * contrib[c];
          };
          add(t.y0, t.x0, w00);
          add(t.y0, t.x1, w01);
          add(t.y1, t.x0, w10);
          add(t.y1, t.x1, w11);
        }
      }
    }
  return g;
}

/// Local 2D window baseline: (2r+1)^2 bins per level over the raw
/// pyramid. Channel order is level, then row offset, then column offset;
/// level l is sampled at ((h+fy)/2^l + dy, (w+fx)/2^l + dx).
template <typename T>
CostTensor<T> build_local2d(const FeatureMap<T>& source, const FeaturePyramid<T>& target,
                            const FlowField<T>& flow, int radius) {
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
  if (source.empty()) throw std::invalid_argument("empty grid");
  if (flow.height() != source.height() || flow.width() != source.width())
    throw std::invalid_argument("flow grid does not match source features");
  if (!target[0].same_shape(source)) throw std::invalid_argument("target grid does not match source features");
  const int h = source.height();
  const int w = source.width();
  const int d = source.channels();
  const int side = 2 * radius + 1;
  const int per_level = side * side;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  CostTensor<T> out(3 * per_level, h, w);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> sample(static_cast<std::size_t>(d));
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const T ty = static_cast<T>(y) + flow.v(y, x);
      const T tx = static_cast<T>(x) + flow.u(y, x);
      auto src = source.at(y, x);
      for (int level = 0; level < 3; ++level) {
        const T s = static_cast<T>(1 << level);
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            bilinear_sample_into(target[level], tx / s + static_cast<T>(dx), ty / s + static_cast<T>(dy),
                                 std::span<T>(sample));
            const int c = level * per_level + (dy + radius) * side + (dx + radius);
            out(c, y, x) = detail::dot<T>(src, std::span<const T>(sample)) * scale;
          }
      }
    }
  });
  return out;
}

/// Static 1D all-row/all-column baseline: W horizontal bins then H vertical
/// bins per pixel, over raw target features.
template <typename T>
CostTensor<T> build_global1d(const FeatureMap<T>& source, const FeatureMap<T>& target) {
  if (!source.same_shape(target)) throw std::invalid_argument("source and target grids differ");
  if (source.empty()) throw std::invalid_argument("empty grid");
  const int h = source.height();
  const int w = source.width();
  const T scale = T(1) / std::sqrt(static_cast<T>(source.channels()));
  CostTensor<T> out(h + w, h, w);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      auto src = source.at(y, x);
      for (int j = 0; j < w; ++j) out(j, y, x) = detail::dot(src, target.at(y, j)) * scale;
      for (int i = 0; i < h; ++i) out(w + i, y, x) = detail::dot(src, target.at(i, x)) * scale;
    }
  });
  return out;
}

/// Full all-pairs volume: channel (i*W + j) holds the correlation with
/// target pixel (i, j).
template <typename T>
CostTensor<T> build_all_pairs(const FeatureMap<T>& source, const FeatureMap<T>& target) {
  if (!source.same_shape(target)) throw std::invalid_argument("source and target grids differ");
  if (source.empty()) throw std::invalid_argument("empty grid");
  const int h = source.height();
  const int w = source.width();
  const T scale = T(1) / std::sqrt(static_cast<T>(source.channels()));
  CostTensor<T> out(h * w, h, w);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t c = begin; c < end; ++c) {
      auto tgt = target.at(static_cast<int>(c / w), static_cast<int>(c % w));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(static_cast<int>(c), y, x) = detail::dot(source.at(y, x), tgt) * scale;
    }
  });
  return out;
}

enum class RepresentationKind { LocalOrthogonal, Local2D, Global1D, AllPairs4D };

inline const char* to_string(RepresentationKind k) {
  switch (k) {
    case RepresentationKind::LocalOrthogonal: return "LocalOrthogonal";
    case RepresentationKind::Local2D: return "Local2D";
    case RepresentationKind::Global1D: return "Global1D";
    case RepresentationKind::AllPairs4D: return "AllPairs4D";
  }
  return "?";
}

struct RepresentationParams {
  int lov_radius = 8;
  int local2d_radius = 4;
};

/// Per-representation element count at an H x W feature grid.
inline std::uint64_t element_count(RepresentationKind kind, std::uint64_t h, std::uint64_t w,
                                   const RepresentationParams& params = {}) {
  const std::uint64_t hw = h * w;
  switch (kind) {
    case RepresentationKind::LocalOrthogonal:
      return hw * (4 * static_cast<std::uint64_t>(params.lov_radius) + 2);
    case RepresentationKind::Local2D: {
      const std::uint64_t side = 2 * static_cast<std::uint64_t>(params.local2d_radius) + 1;
      return hw * side * side * 3;
    }
    case RepresentationKind::Global1D: return hw * (h + w);
    case RepresentationKind::AllPairs4D: return hw * hw;
  }
  return 0;
}

}  // namespace lov
