#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lov/costvolume.hpp"
#include "lov/solver.hpp"

namespace lov::bench {

/// A benchmark grid. Input resolutions map to a feature grid of
/// floor(H/8) x floor(W/8); "feat:HxW" names a feature grid directly.
struct Resolution {
  std::string label;
  int input_height = 0;
  int input_width = 0;
  int feat_height = 0;
  int feat_width = 0;

  bool has_input() const { return input_height > 0; }
};

inline Resolution parse_resolution(const std::string& token) {
  const bool feature_only = token.rfind("feat:", 0) == 0;
  const std::string dims = feature_only ? token.substr(5) : token;
  int h = 0;
  int w = 0;
  char sep = 0;
  std::istringstream in(dims);
  if (!(in >> h >> sep >> w) || (sep != 'x' && sep != 'X') || !in.eof() || h < 1 || w < 1)
    throw std::invalid_argument("bad resolution '" + token + "' (expected HxW or feat:HxW)");
  if (feature_only) return {token, 0, 0, h, w};
  if (h < 8 || w < 8)
    throw std::invalid_argument("resolution '" + token + "' has an empty feature grid; use feat:HxW");
  return {token, h, w, h / 8, w / 8};
}

inline RepresentationKind parse_kind(const std::string& name) {
  for (auto k : {RepresentationKind::LocalOrthogonal, RepresentationKind::Local2D, RepresentationKind::Global1D,
                 RepresentationKind::AllPairs4D})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown representation: " + name);
}

struct Row {
  std::string representation;
  std::string input_res;
  int feat_h = 0;
  int feat_w = 0;
  std::uint64_t elements = 0;
  std::uint64_t bytes = 0;
  /// Empty when the row is modeled analytically rather than constructed.
  std::optional<std::uint64_t> peak_bytes;
  std::optional<double> construct_ms;
  std::optional<double> estimate_ms;

  bool modeled() const { return !peak_bytes.has_value(); }
};

struct Config {
  std::vector<Resolution> resolutions;
  std::vector<RepresentationKind> kinds{RepresentationKind::LocalOrthogonal, RepresentationKind::Local2D,
                                        RepresentationKind::Global1D, RepresentationKind::AllPairs4D};
  int repeats = 5;
  std::uint64_t construction_cap = std::uint64_t{1} << 28;
  std::uint64_t seed = 0;
  int feature_dim = 32;
  /// Also time a full estimate_flow per input resolution (LocalOrthogonal rows).
  bool time_estimate = true;
  SolverConfig solver{};
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Milliseconds rounded to 1 us so CSV and JSON print the same value.
inline double round_ms(double ms) { return std::round(ms * 1000.0) / 1000.0; }

inline FeatureMap<float> random_features(int h, int w, int d, std::mt19937_64& rng) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  FeatureMap<float> m(h, w, d);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto v = m.at(y, x);
      float n2 = 0;
      for (auto& c : v) {
        c = gauss(rng);
        n2 += c * c;
      }
      for (auto& c : v) c /= std::sqrt(n2);
    }
  return m;
}

/// Coarse levels are pooled when the grid allows it; otherwise the finer
/// level is reused, so any grid size can be benchmarked.
inline FeaturePyramid<float> lenient_pyramid(const FeatureMap<float>& base) {
  FeaturePyramid<float> p;
  p.levels[0] = base;
  for (int l = 1; l < 3; ++l) {
    const auto& prev = p.levels[l - 1];
    p.levels[l] = prev.height() >= 2 && prev.width() >= 2 ? avg_pool_2x2(prev) : prev;
  }
  return p;
}

template <typename Build>
std::pair<std::uint64_t, double> measure(int repeats, Build&& build) {
  std::vector<double> times;
  std::int64_t peak = 0;
  for (int i = 0; i < repeats; ++i) {
    memory::PeakScope scope;
    const auto t0 = std::chrono::steady_clock::now();
    {
      auto result = build();
      (void)result;
    }
    const auto t1 = std::chrono::steady_clock::now();
    peak = std::max(peak, scope.peak_bytes());
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return {static_cast<std::uint64_t>(peak), median(std::move(times))};
}

inline double time_estimate(const Resolution& res, const Config& config) {
  const int h = std::max(32, res.input_height / 32 * 32);
  const int w = std::max(32, res.input_width / 32 * 32);
  const auto pair = make_synthetic_pair(TextureSpec{config.seed}, Translation{5.5, -3.25}, h, w);
  std::vector<double> times;
  for (int i = 0; i < config.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto flow = estimate_flow<float>(pair.source, pair.target, config.solver);
    const auto t1 = std::chrono::steady_clock::now();
    (void)flow;
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return median(std::move(times));
}

}  // namespace detail

/// Element counts, bytes, measured peak allocation and median construction
/// time per (resolution, representation). Representations above the
/// construction cap are reported analytically.
inline std::vector<Row> run(const Config& config) {
  if (config.repeats < 1) throw std::invalid_argument("repeat count must be >= 1");
  std::vector<Row> rows;
  const RepresentationParams params{config.solver.schedule.radius(), 4};
  for (const auto& res : config.resolutions) {
    std::mt19937_64 rng(config.seed);
    const int h = res.feat_height;
    const int w = res.feat_width;
    const auto source = detail::random_features(h, w, config.feature_dim, rng);
    const auto target = detail::random_features(h, w, config.feature_dim, rng);
    const auto pyramid = detail::lenient_pyramid(target);
    const FlowField<float> flow(h, w);

    for (auto kind : config.kinds) {
      Row row;
      row.representation = to_string(kind);
      row.input_res = res.label;
      row.feat_h = h;
      row.feat_w = w;
      row.elements = element_count(kind, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(w), params);
      row.bytes = row.elements * 4;
      if (row.elements <= config.construction_cap) {
        std::pair<std::uint64_t, double> m;
        switch (kind) {
          case RepresentationKind::LocalOrthogonal: {
            const auto attended = attend_pyramid(pyramid, config.solver.attention);
            m = detail::measure(config.repeats,
                                [&] { return build_lov(source, attended, flow, config.solver.schedule); });
            break;
          }
          case RepresentationKind::Local2D:
            m = detail::measure(config.repeats, [&] { return build_local2d(source, pyramid, flow, 4); });
            break;
          case RepresentationKind::Global1D:
            m = detail::measure(config.repeats, [&] { return build_global1d(source, target); });
            break;
          case RepresentationKind::AllPairs4D:
            m = detail::measure(config.repeats, [&] { return build_all_pairs(source, target); });
            break;
        }
        row.peak_bytes = m.first;
        row.construct_ms = detail::round_ms(m.second);
      }
      if (kind == RepresentationKind::LocalOrthogonal && config.time_estimate && res.has_input())
        row.estimate_ms = detail::round_ms(detail::time_estimate(res, config));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string format_ms(double ms) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", ms);
  return buf;
}

inline std::string to_csv(const std::vector<Row>& rows) {
  std::string out = "representation,input_res,feat_h,feat_w,elements,bytes,peak_bytes,construct_ms,estimate_ms\n";
  for (const auto& r : rows) {
    out += r.representation + "," + r.input_res + "," + std::to_string(r.feat_h) + "," + std::to_string(r.feat_w) +
           "," + std::to_string(r.elements) + "," + std::to_string(r.bytes) + ",";
    out += r.peak_bytes ? std::to_string(*r.peak_bytes) : "modeled";
    out += ",";
    out += r.construct_ms ? format_ms(*r.construct_ms) : "modeled";
    out += ",";
    out += r.estimate_ms ? format_ms(*r.estimate_ms) : "";
    out += "\n";
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<Row>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json o;
    o["representation"] = r.representation;
    o["input_res"] = r.input_res;
    o["feat_h"] = r.feat_h;
    o["feat_w"] = r.feat_w;
    o["elements"] = r.elements;
    o["bytes"] = r.bytes;
    o["peak_bytes"] = r.peak_bytes ? nlohmann::json(*r.peak_bytes) : nlohmann::json("modeled");
    o["construct_ms"] = r.construct_ms ? nlohmann::json(*r.construct_ms) : nlohmann::json("modeled");
    o["estimate_ms"] = r.estimate_ms ? nlohmann::json(*r.estimate_ms) : nlohmann::json(nullptr);
    out.push_back(std::move(o));
  }
  return out;
}

/// Human-readable summary of element ratios against LocalOrthogonal.
inline std::string summary(const std::vector<Row>& rows) {
  std::ostringstream out;
  out << "Figures cover the cost-volume buffers only; network activations and framework overhead are "
         "excluded.\n";
  for (const auto& base : rows) {
    if (base.representation != to_string(RepresentationKind::LocalOrthogonal)) continue;
    for (const auto& r : rows) {
      if (r.input_res != base.input_res || &r == &base || base.elements == 0) continue;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: %s / LocalOrthogonal = %.3f\n", r.input_res.c_str(),
                    r.representation.c_str(), static_cast<double>(r.elements) / static_cast<double>(base.elements));
      out << buf;
    }
  }
  return out.str();
}

}  // namespace lov::bench
