#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "lov/features.hpp"
#include "lov/grid.hpp"

namespace lov {

enum class Axis { Vertical, Horizontal };

enum class Projection { Identity, FixedRandomOrthonormal };

struct AttentionConfig {
  Axis axis = Axis::Vertical;
  int radius = 4;
  Projection projection = Projection::Identity;
  std::uint64_t seed = 0;

  void validate() const {
    if (radius < 0) throw std::invalid_argument("attention radius must be >= 0");
  }
};

/// Attention radius at a pyramid level: halved per level, but never below
/// min(2, radius), so a zero radius stays zero at every level.
inline int level_radius(int radius, int level) {
  return std::max(radius >> level, std::min(radius, 2));
}

/// Row-major dim x dim orthonormal matrix from Gram-Schmidt on a seeded
/// Gaussian matrix.
template <typename T>
std::vector<T> random_orthonormal(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> m(static_cast<std::size_t>(dim) * dim);
  for (auto& v : m) v = gauss(rng);
  for (int i = 0; i < dim; ++i) {
    double* row = &m[static_cast<std::size_t>(i) * dim];
    // Two passes keep the rows orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) {
        const double* prev = &m[static_cast<std::size_t>(j) * dim];
        double dot = 0;
        for (int k = 0; k < dim; ++k) dot += row[k] * prev[k];
        for (int k = 0; k < dim; ++k) row[k] -= dot * prev[k];
      }
    double norm = 0;
    for (int k = 0; k < dim; ++k) norm += row[k] * row[k];
    norm = std::sqrt(norm);
    for (int k = 0; k < dim; ++k) row[k] /= norm;
  }
  return {m.begin(), m.end()};
}

/// Vertically and horizontally attended maps per pyramid level.
template <typename T>
struct AttendedPyramid {
  std::array<FeatureMap<T>, 3> vertical;
  std::array<FeatureMap<T>, 3> horizontal;

  const FeatureMap<T>& get(Axis axis, int level) const {
    return axis == Axis::Vertical ? vertical[static_cast<std::size_t>(level)]
                                  : horizontal[static_cast<std::size_t>(level)];
  }
  FeatureMap<T>& get(Axis axis, int level) {
    return axis == Axis::Vertical ? vertical[static_cast<std::size_t>(level)]
                                  : horizontal[static_cast<std::size_t>(level)];
  }
};

namespace detail {

template <typename T>
FeatureMap<T> project(const FeatureMap<T>& map, const std::vector<T>& w) {
  const int d = map.channels();
  FeatureMap<T> out(map.height(), map.width(), d);
  parallel_for(static_cast<std::int64_t>(map.height()) * map.width(),
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t p = begin; p < end; ++p) {
                   const int y = static_cast<int>(p / map.width());
                   const int x = static_cast<int>(p % map.width());
                   auto in = map.at(y, x);
                   auto o = out.at(y, x);
                   for (int i = 0; i < d; ++i) {
                     T acc = 0;
                     for (int k = 0; k < d; ++k) acc += w[static_cast<std::size_t>(i) * d + k] * in[k];
                     o[i] = acc;
                   }
                 }
               });
  return out;
}

template <typename T>
FeatureMap<T> project_transposed(const FeatureMap<T>& map, const std::vector<T>& w) {
  const int d = map.channels();
  std::vector<T> wt(w.size());
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      wt[static_cast<std::size_t>(k) * d + i] = w[static_cast<std::size_t>(i) * d + k];
  return project(map, wt);
}

template <typename T>
struct Projections {
  std::vector<T> query;
  std::vector<T> key;
};

/// Query/key matrices; both are empty for the identity projection.
template <typename T>
Projections<T> make_projections(const AttentionConfig& config, int dim) {
  if (config.projection == Projection::Identity) return {};
  return {random_orthonormal<T>(dim, config.seed), random_orthonormal<T>(dim, config.seed + 1)};
}

/// Position along the attention axis and the axis length.
struct AxisGeometry {
  int step_y, step_x, length;
  int coord(int y, int x) const { return step_y ? y : x; }
};

inline AxisGeometry axis_geometry(Axis axis, int height, int width) {
  return axis == Axis::Vertical ? AxisGeometry{1, 0, height} : AxisGeometry{0, 1, width};
}

/// Softmax weights of one pixel over its in-bounds window [lo, hi].
template <typename T>
void window_weights(const FeatureMap<T>& q, const FeatureMap<T>& k, int y, int x, int lo, int hi,
                    const AxisGeometry& g, T scale, std::vector<T>& weights) {
  weights.resize(static_cast<std::size_t>(hi - lo + 1));
  auto qv = q.at(y, x);
  T max_score = -std::numeric_limits<T>::infinity();
  for (int r = lo; r <= hi; ++r) {
    auto kv = k.at(y + r * g.step_y, x + r * g.step_x);
    T s = 0;
    for (int c = 0; c < q.channels(); ++c) s += qv[c] * kv[c];
    s *= scale;
    weights[static_cast<std::size_t>(r - lo)] = s;
    max_score = std::max(max_score, s);
  }
  T total = 0;
  for (auto& w : weights) {
    w = std::exp(w - max_score);
    total += w;
  }
  for (auto& w : weights) w /= total;
}

}  // namespace detail

/// 1D local axial attention. Each pixel attends to neighbours within
/// config.radius along the axis; out-of-bounds neighbours are excluded from
/// the softmax. Scores use projected features scaled by 1/sqrt(D); the
/// aggregated values are the unprojected target features.
template <typename T>
FeatureMap<T> local_axial_attention(const FeatureMap<T>& target, const AttentionConfig& config) {
  config.validate();
  if (target.empty()) throw std::invalid_argument("empty grid");
  const int h = target.height();
  const int w = target.width();
  const int d = target.channels();
  if (config.radius == 0) return target;

  const auto proj = detail::make_projections<T>(config, d);
  const FeatureMap<T> q_store = proj.query.empty() ? FeatureMap<T>{} : detail::project(target, proj.query);
  const FeatureMap<T> k_store = proj.key.empty() ? FeatureMap<T>{} : detail::project(target, proj.key);
  const FeatureMap<T>& q = proj.query.empty() ? target : q_store;
  const FeatureMap<T>& k = proj.key.empty() ? target : k_store;

  const auto g = detail::axis_geometry(config.axis, h, w);
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  FeatureMap<T> out(h, w, d);
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> weights;
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const int pos = g.coord(y, x);
      const int lo = std::max(-config.radius, -pos);
      const int hi = std::min(config.radius, g.length - 1 - pos);
      detail::window_weights(q, k, y, x, lo, hi, g, scale, weights);
      auto o = out.at(y, x);
      for (int r = lo; r <= hi; ++r) {
        const T a = weights[static_cast<std::size_t>(r - lo)];
        auto v = target.at(y + r * g.step_y, x + r * g.step_x);
        for (int c = 0; c < d; ++c) o[c] += a * v[c];
      }
    }
  });
  return out;
}

/// Applies vertical and horizontal attention to every pyramid level, with
/// the radius reduced per level by level_radius().
template <typename T>
AttendedPyramid<T> attend_pyramid(const FeaturePyramid<T>& pyramid, const AttentionConfig& base) {
  base.validate();
  AttendedPyramid<T> out;
  for (int level = 0; level < 3; ++level) {
    for (Axis axis : {Axis::Vertical, Axis::Horizontal}) {
      AttentionConfig c = base;
      c.axis = axis;
      c.radius = level_radius(base.radius, level);
      out.get(axis, level) = local_axial_attention(pyramid[level], c);
    }
  }
  return out;
}

/// Gradient of <upstream, local_axial_attention(target)> with respect to
/// target, through the value, query and key paths.
template <typename T>
FeatureMap<T> attention_backward(const FeatureMap<T>& target, const AttentionConfig& config,
                                 const FeatureMap<T>& upstream) {
  config.validate();
  if (!target.same_shape(upstream)) throw std::invalid_argument("upstream gradient shape mismatch");
  if (config.radius == 0 || target.empty()) return upstream;

  const int h = target.height();
  const int w = target.width();
  const int d = target.channels();
  const int radius = config.radius;
  const int span = 2 * radius + 1;

  const auto proj = detail::make_projections<T>(config, d);
  const FeatureMap<T> q_store = proj.query.empty() ? FeatureMap<T>{} : detail::project(target, proj.query);
  const FeatureMap<T> k_store = proj.key.empty() ? FeatureMap<T>{} : detail::project(target, proj.key);
  const FeatureMap<T>& q = proj.query.empty() ? target : q_store;
  const FeatureMap<T>& k = proj.key.empty() ? target : k_store;

  const auto g = detail::axis_geometry(config.axis, h, w);
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  const std::int64_t n = static_cast<std::int64_t>(h) * w;

  // Per pixel and offset: attention weight and score gradient. Offsets that
  // fall outside the image keep zero entries.
  std::vector<T> attn(static_cast<std::size_t>(n * span), T(0));
  std::vector<T> dscore(static_cast<std::size_t>(n * span), T(0));
  parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
    std::vector<T> weights;
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const int pos = g.coord(y, x);
      const int lo = std::max(-radius, -pos);
      const int hi = std::min(radius, g.length - 1 - pos);
      detail::window_weights(q, k, y, x, lo, hi, g, scale, weights);
      auto up = upstream.at(y, x);
      T weighted = 0;
      std::vector<T> dweight(weights.size());
      for (int r = lo; r <= hi; ++r) {
        auto v = target.at(y + r * g.step_y, x + r * g.step_x);
        T s = 0;
        for (int c = 0; c < d; ++c) s += up[c] * v[c];
        dweight[static_cast<std::size_t>(r - lo)] = s;
        weighted += weights[static_cast<std::size_t>(r - lo)] * s;
      }
      for (int r = lo; r <= hi; ++r) {
        const auto i = static_cast<std::size_t>(r - lo);
        const auto slot = static_cast<std::size_t>(p * span + (r + radius));
        attn[slot] = weights[i];
        dscore[slot] = weights[i] * (dweight[i] - weighted) * scale;
      }
    }
  });

  // Gather the contributions each pixel receives as a neighbour (value and
  // key paths) and as a centre (query path).
  FeatureMap<T> dvalue(h, w, d);
  FeatureMap<T> dquery(h, w, d);
  FeatureMap<T> dkey(h, w, d);
  parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      const int pos = g.coord(y, x);
      const int lo = std::max(-radius, -pos);
      const int hi = std::min(radius, g.length - 1 - pos);
      auto dv = dvalue.at(y, x);
      auto dq = dquery.at(y, x);
      auto dk = dkey.at(y, x);
      for (int r = lo; r <= hi; ++r) {
        // Pixel p + r sees p at offset -r.
        const int ny = y + r * g.step_y;
        const int nx = x + r * g.step_x;
        const std::int64_t np = static_cast<std::int64_t>(ny) * w + nx;
        const T a_in = attn[static_cast<std::size_t>(np * span + (-r + radius))];
        const T ds_in = dscore[static_cast<std::size_t>(np * span + (-r + radius))];
        const T ds_out = dscore[static_cast<std::size_t>(p * span + (r + radius))];
        auto up = upstream.at(ny, nx);
        auto qn = q.at(ny, nx);
        auto kn = k.at(ny, nx);
        for (int c = 0; c < d; ++c) {
          dv[c] += a_in * up[c];
          dk[c] += ds_in * qn[c];
          dq[c] += ds_out * kn[c];
        }
      }
    }
  });

  if (!proj.query.empty()) dquery = detail::project_transposed(dquery, proj.query);
  if (!proj.key.empty()) dkey = detail::project_transposed(dkey, proj.key);
  auto out_values = dvalue.values();
  auto qv = dquery.values();
  auto kv = dkey.values();
  for (std::size_t i = 0; i < out_values.size(); ++i) out_values[i] += qv[i] + kv[i];
  return dvalue;
}

}  // namespace lov
