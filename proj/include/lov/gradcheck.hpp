#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lov/attention.hpp"
#include "lov/costvolume.hpp"

namespace lov::gradcheck {

inline constexpr double kStep = 1e-5;
/// Denominator floor for the relative error, so entries whose true
/// gradient is (near) zero are judged on absolute error.
inline constexpr double kRelativeFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
}

struct CaseResult {
  std::string op;
  std::uint64_t seed = 0;
  double max_relative_error = 0;
  std::size_t parameters = 0;
};

namespace detail {

inline void fill_uniform(std::span<double> values, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : values) v = u(rng);
}

/// Central difference of `loss` for every entry of `params`, compared with
/// `analytic` (same layout). Returns the worst relative error.
inline double compare(std::span<double> params, std::span<const double> analytic,
                      const std::function<double()>& loss) {
  double worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    const double up = loss();
    params[i] = saved - kStep;
    const double down = loss();
    params[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * kStep)));
  }
  return worst;
}

}  // namespace detail

/// Checks attention_backward on a random 6x6x4 map with radius 2. The seed
/// also picks the axis (odd: horizontal) and projection (seed % 4 >= 2:
/// fixed random orthonormal).
inline CaseResult check_attention(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureMap<double> target(6, 6, 4);
  FeatureMap<double> upstream(6, 6, 4);
  detail::fill_uniform(target.values(), rng);
  detail::fill_uniform(upstream.values(), rng);
  AttentionConfig config;
  config.radius = 2;
  config.axis = seed % 2 ? Axis::Horizontal : Axis::Vertical;
  config.projection = seed % 4 >= 2 ? Projection::FixedRandomOrthonormal : Projection::Identity;
  config.seed = seed;

  const auto grad = attention_backward(target, config, upstream);
  auto loss = [&] {
    const auto out = local_axial_attention(target, config);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * upstream.values()[i];
    return s;
  };
  CaseResult r{"attention_backward", seed, 0, target.size()};
  r.max_relative_error = detail::compare(target.values(), grad.values(), loss);
  return r;
}

/// Checks lov_backward with the default schedule on a random 8x8x4 source,
/// random attended maps, and a flow whose components are integers plus 0.4,
/// so every level-0 sample stays clear of lattice lines.
inline CaseResult check_lov(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr int n = 8;
  constexpr int d = 4;
  FeatureMap<double> source(n, n, d);
  detail::fill_uniform(source.values(), rng);
  AttendedPyramid<double> attended;
  for (int level = 0; level < 3; ++level)
    for (Axis a : {Axis::Vertical, Axis::Horizontal}) {
      attended.get(a, level) = FeatureMap<double>(n >> level, n >> level, d);
      detail::fill_uniform(attended.get(a, level).values(), rng);
    }
  FlowField<double> flow(n, n);
  std::uniform_int_distribution<int> shift(-2, 2);
  for (auto& u : flow.u_values()) u = shift(rng) + 0.4;
  for (auto& v : flow.v_values()) v = shift(rng) + 0.4;
  const auto schedule = LookupSchedule::radius_distribution();
  CostTensor<double> upstream(2 * schedule.bin_count(), n, n);
  detail::fill_uniform(upstream.values(), rng);

  const auto grad = lov_backward(source, attended, flow, schedule, upstream);
  auto loss = [&] {
    const auto cv = build_lov(source, attended, flow, schedule);
    double s = 0;
    for (std::size_t i = 0; i < cv.data.size(); ++i) s += cv.data.values()[i] * upstream.values()[i];
    return s;
  };
  CaseResult r{"lov_backward", seed, 0, 0};
  auto check = [&](std::span<double> params, std::span<const double> analytic) {
    r.max_relative_error = std::max(r.max_relative_error, detail::compare(params, analytic, loss));
    r.parameters += params.size();
  };
  check(source.values(), grad.source.values());
  for (int level = 0; level < 3; ++level)
    for (Axis a : {Axis::Vertical, Axis::Horizontal})
      check(attended.get(a, level).values(), grad.attended.get(a, level).values());
  check(flow.u_values(), grad.flow.u_values());
  check(flow.v_values(), grad.flow.v_values());
  return r;
}

}  // namespace lov::gradcheck
