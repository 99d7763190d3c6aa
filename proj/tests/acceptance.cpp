// Acceptance checks: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lov/attention.hpp"
#include "lov/costvolume.hpp"
#include "lov/gradcheck.hpp"
#include "lov/io.hpp"
#include "lov/solver.hpp"
#include "oracles.hpp"

using lov::Axis;
using lov::FeatureMap;
using lov::FlowField;
using lov::LookupSchedule;
using lov::RepresentationKind;

namespace {

constexpr double kOracleTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr double kSoftmaxTol = 1e-6;
constexpr double kHullSlack = 1e-12;
constexpr double kMetricTol = 1e-9;
constexpr double kEpeLimit = 2.0;
constexpr double kPassFraction = 0.95;
constexpr int kThreadsN = 4;

/// FNV-1a over the bit patterns of every value fed in; two runs agree on the
/// digest only if every recorded number is bit-identical.
class Digest {
 public:
  void add(double v) { mix(std::bit_cast<std::uint64_t>(v)); }
  void add(float v) { mix(std::bit_cast<std::uint32_t>(v)); }
  template <typename Range>
  void add_all(const Range& r) {
    for (auto v : r) add(v);
  }
  std::uint64_t value() const { return h_; }

 private:
  void mix(std::uint64_t bits) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (bits >> (8 * i)) & 0xff;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

struct Outcome {
  bool pass = false;
  std::string detail;
  std::uint64_t digest = 0;
  double seconds = 0;
};

Outcome timed(const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = fn();
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

bool report(int id, const char* name, const Outcome& o, double limit_s) {
  const bool in_time = limit_s <= 0 || o.seconds < limit_s;
  const bool ok = o.pass && in_time;
  std::printf("[%s] %d %s: %s", ok ? "PASS" : "FAIL", id, name, o.detail.c_str());
  if (limit_s > 0) std::printf(" (%.2f s, limit %.0f s)", o.seconds, limit_s);
  std::printf("\n");
  std::fflush(stdout);
  return ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Channel counts.
Outcome channel_counts() {
  const auto schedule = LookupSchedule::radius_distribution();
  const auto p = lov::build_pyramid(oracle::random_unit_map(8, 8, 4, 1));
  lov::AttentionConfig identity;
  identity.radius = 0;
  const auto lov_built = lov::build_lov(p[0], lov::attend_pyramid(p, identity), FlowField<double>(8, 8), schedule);
  const auto l2d_built = lov::build_local2d(p[0], p, FlowField<double>(8, 8), 4);
  const auto lov_count = lov::element_count(RepresentationKind::LocalOrthogonal, 1, 1);
  const auto l2d_count = lov::element_count(RepresentationKind::Local2D, 1, 1);
  const double ratio = static_cast<double>(l2d_count) / static_cast<double>(lov_count);
  Outcome o;
  o.pass = lov_count == 34 && l2d_count == 243 && lov_built.data.channels() == 34 &&
           l2d_built.channels() == 243 && std::abs(ratio - 7.147) < 5e-4;
  o.detail = fmt("LOV %d channels, Local2D %d channels, ratio 1/%.3f", lov_built.data.channels(),
                 l2d_built.channels(), ratio);
  return o;
}

// 2. Element counts at the benchmark grids against precomputed integers.
Outcome element_counts() {
  struct Expected {
    std::uint64_t h, w, lov, local2d, global1d, all_pairs;
  };
  const Expected table[] = {
      {56, 128, 243712ull, 1741824ull, 1318912ull, 51380224ull},
      {135, 240, 1101600ull, 7873200ull, 12150000ull, 1049760000ull},
      {270, 480, 4406400ull, 31492800ull, 97200000ull, 16796160000ull},
  };
  bool ok = true;
  for (const auto& e : table) {
    ok = ok && lov::element_count(RepresentationKind::LocalOrthogonal, e.h, e.w) == e.lov;
    ok = ok && lov::element_count(RepresentationKind::Local2D, e.h, e.w) == e.local2d;
    ok = ok && lov::element_count(RepresentationKind::Global1D, e.h, e.w) == e.global1d;
    ok = ok && lov::element_count(RepresentationKind::AllPairs4D, e.h, e.w) == e.all_pairs;
  }
  // 1080p: LOV / Global1D = 34/375 and LOV / AllPairs4D = 34/32400, exactly.
  const auto& hd = table[1];
  const auto lov_hd = lov::element_count(RepresentationKind::LocalOrthogonal, hd.h, hd.w);
  const auto g1d_hd = lov::element_count(RepresentationKind::Global1D, hd.h, hd.w);
  const auto ap_hd = lov::element_count(RepresentationKind::AllPairs4D, hd.h, hd.w);
  ok = ok && lov_hd * 375 == g1d_hd * 34 && lov_hd * 32400 == ap_hd * 34;
  Outcome o;
  o.pass = ok;
  o.detail = fmt("3 grids x 4 representations exact; 135x240 LOV/Global1D = 34/375, LOV/AllPairs4D = 34/32400 "
                 "(AllPairs4D %.1fx LOV)",
                 static_cast<double>(ap_hd) / static_cast<double>(lov_hd));
  return o;
}

// 3. LOV level-0, Local2D and Global1D against brute-force dot products.
Outcome oracle_equivalence() {
  constexpr int n = 16, d = 8, instances = 20;
  const auto schedule = LookupSchedule::radius_distribution();
  const auto bins = schedule.bins();
  const double scale = 1 / std::sqrt(static_cast<double>(d));
  auto clampi = [](int v) { return std::clamp(v, 0, n - 1); };
  lov::AttentionConfig identity;
  identity.radius = 0;
  double worst = 0;
  std::size_t compared = 0;
  Digest digest;
  for (int i = 0; i < instances; ++i) {
    const auto fs = oracle::random_map(n, n, d, 1000 + i);
    const auto ft = oracle::random_map(n, n, d, 2000 + i);
    std::mt19937_64 rng(3000 + i);
    std::uniform_int_distribution<int> shift(-4, 4);
    FlowField<double> flow(n, n);
    for (auto& v : flow.u_values()) v = shift(rng);
    for (auto& v : flow.v_values()) v = shift(rng);
    const auto pyramid = lov::build_pyramid(ft);

    const auto cv = lov::build_lov(fs, lov::attend_pyramid(pyramid, identity), flow, schedule);
    digest.add_all(cv.data.values());
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const int ty = y + static_cast<int>(flow.v(y, x));
        const int tx = x + static_cast<int>(flow.u(y, x));
        for (int k = 0; k < static_cast<int>(bins.size()); ++k) {
          if (bins[k].level != 0) continue;
          const int r = bins[k].offset;
          const double h = oracle::dot(fs, y, x, ft, clampi(ty), clampi(tx + r)) * scale;
          const double v = oracle::dot(fs, y, x, ft, clampi(ty + r), clampi(tx)) * scale;
          worst = std::max({worst, std::abs(cv.horizontal(k, y, x) - h), std::abs(cv.vertical(k, y, x) - v)});
          compared += 2;
        }
      }

    constexpr int radius = 4, side = 2 * radius + 1;
    const auto l2d = lov::build_local2d(fs, pyramid, flow, radius);
    digest.add_all(l2d.values());
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double ty = y + flow.v(y, x), tx = x + flow.u(y, x);
        for (int level = 0; level < 3; ++level) {
          const double s = 1 << level;
          for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
              double expect = 0;
              for (int c = 0; c < d; ++c)
                expect += fs(y, x, c) * oracle::bilinear(pyramid[level], tx / s + dx, ty / s + dy, c);
              const int ch = level * side * side + (dy + radius) * side + (dx + radius);
              worst = std::max(worst, std::abs(l2d(ch, y, x) - expect * scale));
              ++compared;
            }
        }
      }

    const auto g1d = lov::build_global1d(fs, ft);
    digest.add_all(g1d.values());
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(g1d(j, y, x) - oracle::dot(fs, y, x, ft, y, j) * scale));
        for (int i2 = 0; i2 < n; ++i2)
          worst = std::max(worst, std::abs(g1d(n + i2, y, x) - oracle::dot(fs, y, x, ft, i2, x) * scale));
        compared += 2 * n;
      }
  }
  Outcome o;
  o.pass = worst <= kOracleTol;
  o.detail = fmt("%d instances 16x16x8, %zu entries, max |diff| %.2e (tol %.0e)", instances, compared, worst,
                 kOracleTol);
  o.digest = digest.value();
  return o;
}

// 4. Hand-written backward passes against central differences.
Outcome gradient_suite() {
  constexpr int seeds = 20;
  double worst_att = 0, worst_lov = 0;
  Digest digest;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const auto a = lov::gradcheck::check_attention(s);
    const auto l = lov::gradcheck::check_lov(s);
    worst_att = std::max(worst_att, a.max_relative_error);
    worst_lov = std::max(worst_lov, l.max_relative_error);
    digest.add(a.max_relative_error);
    digest.add(l.max_relative_error);
  }
  Outcome o;
  o.pass = worst_att < kGradTol && worst_lov < kGradTol;
  o.detail = fmt("%d seeds each, step %.0e: attention_backward %.2e, lov_backward %.2e (tol %.0e)", seeds,
                 lov::gradcheck::kStep, worst_att, worst_lov, kGradTol);
  o.digest = digest.value();
  return o;
}

// 5. Attention properties on randomized instances.
Outcome attention_properties() {
  constexpr int cases = 60;
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<int> side(3, 12), dim(1, 8), radius(1, 5), coin(0, 1);
  int failures = 0;
  double worst_norm = 0, worst_hull = 0, worst_const = 0;
  Digest digest;
  auto transpose = [](const FeatureMap<double>& m) {
    FeatureMap<double> t(m.width(), m.height(), m.channels());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        for (int c = 0; c < m.channels(); ++c) t(x, y, c) = m(y, x, c);
    return t;
  };
  for (int i = 0; i < cases; ++i) {
    const int h = side(rng), w = side(rng), d = dim(rng);
    lov::AttentionConfig cfg;
    cfg.radius = radius(rng);
    cfg.axis = coin(rng) ? Axis::Horizontal : Axis::Vertical;
    cfg.projection = coin(rng) ? lov::Projection::FixedRandomOrthonormal : lov::Projection::Identity;
    cfg.seed = static_cast<std::uint64_t>(i);
    const auto m = oracle::random_map(h, w, d, 7000 + i);
    const auto out = lov::local_axial_attention(m, cfg);
    digest.add_all(out.values());

    auto zero = cfg;
    zero.radius = 0;
    if (!(lov::local_axial_attention(m, zero) == m)) ++failures;

    FeatureMap<double> flat(h, w, d);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < d; ++c) flat(y, x, c) = 0.3 * c - 0.5;
    const auto flat_out = lov::local_axial_attention(flat, cfg);
    for (std::size_t k = 0; k < flat.size(); ++k)
      worst_const = std::max(worst_const, std::abs(flat_out.values()[k] - flat.values()[k]));

    // Softmax weights as the kernel computes them, over the projected scores.
    const auto proj = lov::detail::make_projections<double>(cfg, d);
    const auto q = proj.query.empty() ? m : lov::detail::project(m, proj.query);
    const auto kmap = proj.key.empty() ? m : lov::detail::project(m, proj.key);
    const auto g = lov::detail::axis_geometry(cfg.axis, h, w);
    std::vector<double> weights;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int pos = g.coord(y, x);
        const int lo = std::max(-cfg.radius, -pos);
        const int hi = std::min(cfg.radius, g.length - 1 - pos);
        lov::detail::window_weights(q, kmap, y, x, lo, hi, g, 1 / std::sqrt(static_cast<double>(d)), weights);
        double sum = 0;
        for (double v : weights) {
          if (v < 0) ++failures;
          sum += v;
        }
        worst_norm = std::max(worst_norm, std::abs(sum - 1));
        for (int c = 0; c < d; ++c) {
          double mn = HUGE_VAL, mx = -HUGE_VAL;
          for (int r = lo; r <= hi; ++r) {
            const double v = m(y + r * g.step_y, x + r * g.step_x, c);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
          }
          worst_hull = std::max({worst_hull, mn - out(y, x, c), out(y, x, c) - mx});
        }
      }

    auto swapped = cfg;
    swapped.axis = cfg.axis == Axis::Vertical ? Axis::Horizontal : Axis::Vertical;
    if (!(out == transpose(lov::local_axial_attention(transpose(m), swapped)))) ++failures;
  }
  Outcome o;
  o.pass = failures == 0 && worst_norm <= kSoftmaxTol && worst_hull <= kHullSlack && worst_const <= kOracleTol;
  o.detail = fmt("%d cases: %d identity/transpose/sign failures, |sum w - 1| %.1e (tol %.0e), hull excess %.1e, "
                 "constant drift %.1e",
                 cases, failures, worst_norm, kSoftmaxTol, std::max(worst_hull, 0.0), worst_const);
  o.digest = digest.value();
  return o;
}

// 6. End-to-end convergence on synthetic translations.
struct ConvergenceResult {
  int passed = 0;
  int draws = 0;
  double worst = 0;
  double reach_default = 0;
  double reach_fine_only = 0;
};

double interior_epe(const FlowField<float>& flow, const lov::SyntheticPair& pair) {
  auto mask = lov::interior_mask(flow.height(), flow.width(), 32);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && pair.valid[i];
  return lov::evaluate(flow.cast<double>(), pair.gt, mask).epe;
}

Outcome convergence() {
  constexpr int draws = 40, height = 448, width = 1024;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const lov::SolverConfig config;
  ConvergenceResult r;
  r.draws = draws;
  Digest digest;
  for (int i = 0; i < draws; ++i) {
    const double magnitude = 100.0 * unit(rng);
    const double angle = 2 * std::numbers::pi * unit(rng);
    const lov::Translation t{magnitude * std::cos(angle), magnitude * std::sin(angle)};
    const auto pair = lov::make_synthetic_pair({static_cast<std::uint64_t>(100 + i)}, t, height, width);
    const auto flow = lov::estimate_flow<float>(pair.source, pair.target, config);
    digest.add_all(flow.u_values());
    digest.add_all(flow.v_values());
    const double epe = interior_epe(flow, pair);
    r.worst = std::max(r.worst, epe);
    r.passed += epe <= kEpeLimit;
  }
  // Reach: a 96 px shift is beyond the fine-only schedule's 8-cell window.
  const auto far = lov::make_synthetic_pair({300}, lov::Translation{96, 0}, height, width);
  r.reach_default = interior_epe(lov::estimate_flow<float>(far.source, far.target, config), far);
  auto fine = config;
  fine.schedule = LookupSchedule::level0_only();
  const auto fine_flow = lov::estimate_flow<float>(far.source, far.target, fine);
  r.reach_fine_only = interior_epe(fine_flow, far);
  digest.add(r.reach_default);
  digest.add(r.reach_fine_only);

  Outcome o;
  o.pass = r.passed >= static_cast<int>(std::ceil(kPassFraction * draws)) && r.reach_fine_only > kEpeLimit;
  o.detail = fmt("%d/%d draws with interior EPE <= %.1f (worst %.3f); 96 px: default %.3f, level0-only %.3f", r.passed,
                 draws, kEpeLimit, r.worst, r.reach_default, r.reach_fine_only);
  o.digest = digest.value();
  return o;
}

// 7. Metrics and sequence loss.
Outcome metrics() {
  bool ok = true;
  Digest digest;

  FlowField<double> zero(4, 4);
  FlowField<double> off(4, 4, lov::FlowResolution::Feature, 3.0, 4.0);
  const auto hand = lov::evaluate(off, zero);
  ok = ok && hand.epe == 5.0 && hand.f1_all == 100.0;

  FlowField<double> gt(2, 3, lov::FlowResolution::Full, 1.0, -2.0);
  FlowField<double> shifted(2, 3, lov::FlowResolution::Full, 1.25, -2.75);
  const double two_term = lov::sequence_loss<double>({shifted, shifted}, gt, 0.8);
  ok = ok && std::abs(two_term - 1.8) <= kMetricTol;
  digest.add(hand.epe);
  digest.add(hand.f1_all);
  digest.add(two_term);

  double worst = 0;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-40, 40), noise(-6, 6);
  std::uniform_int_distribution<int> side(1, 20), coin(0, 4);
  constexpr int instances = 25;
  for (int i = 0; i < instances; ++i) {
    const int h = side(rng), w = side(rng);
    FlowField<double> g(h, w, lov::FlowResolution::Full), f(h, w, lov::FlowResolution::Full);
    for (std::size_t p = 0; p < g.size(); ++p) {
      g.u_values()[p] = u(rng);
      g.v_values()[p] = u(rng) / 4;
      f.u_values()[p] = g.u_values()[p] + noise(rng);
      f.v_values()[p] = g.v_values()[p] + noise(rng);
    }
    std::vector<std::uint8_t> mask(g.size());
    for (auto& m : mask) m = coin(rng) != 0;
    mask[0] = 1;
    double sum = 0, sum_a = 0, sum_b = 0;
    int valid = 0, outliers = 0, na = 0, nb = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!mask[p]) continue;
      const double e = std::hypot(f.u_values()[p] - g.u_values()[p], f.v_values()[p] - g.v_values()[p]);
      const double mag = std::hypot(g.u_values()[p], g.v_values()[p]);
      sum += e;
      ++valid;
      outliers += e > 3 && e > 0.05 * mag;
      if (mag < 10) {
        sum_a += e;
        ++na;
      } else if (mag < 40) {
        sum_b += e;
        ++nb;
      }
    }
    const auto r = lov::evaluate(f, g, mask);
    worst = std::max({worst, std::abs(r.epe - sum / valid), std::abs(r.f1_all - 100.0 * outliers / valid),
                      std::abs(r.epe_0_10 - (na ? sum_a / na : 0.0)), std::abs(r.epe_10_40 - (nb ? sum_b / nb : 0.0))});

    // Three-step sequence, gamma 0.8: weights 0.64, 0.8, 1.
    lov::FlowSequence<double> seq{f, g, f};
    for (auto& v : seq[0].u_values()) v += 1;
    double expect = 0;
    const double weight[3] = {0.64, 0.8, 1.0};
    for (int s = 0; s < 3; ++s) {
      double l1 = 0;
      for (std::size_t p = 0; p < g.size(); ++p)
        l1 += std::abs(seq[s].u_values()[p] - g.u_values()[p]) + std::abs(seq[s].v_values()[p] - g.v_values()[p]);
      expect += weight[s] * l1 / static_cast<double>(g.size());
    }
    const double loss = lov::sequence_loss(seq, g, 0.8);
    worst = std::max(worst, std::abs(loss - expect));
    digest.add(r.epe);
    digest.add(r.f1_all);
    digest.add(loss);
  }
  Outcome o;
  o.pass = ok && worst <= kMetricTol;
  o.detail = fmt("(3,4) offset EPE %.1f F1-all %.1f; two-term loss %.6f; %d random oracles max |diff| %.1e (tol %.0e)",
                 hand.epe, hand.f1_all, two_term, instances, worst, kMetricTol);
  o.digest = digest.value();
  return o;
}

// 8. .flo round trips and the golden layout.
Outcome flo_io() {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "lov_acceptance_roundtrip.flo").string();
  std::mt19937_64 rng(8080);
  std::uniform_int_distribution<int> side(1, 16);
  std::uniform_int_distribution<std::uint32_t> bits;
  constexpr int trips = 1000;
  int mismatches = 0;
  for (int t = 0; t < trips; ++t) {
    FlowField<float> f(side(rng), side(rng), lov::FlowResolution::Full);
    for (auto span : {f.u_values(), f.v_values()})
      for (auto& v : span) {
        do v = std::bit_cast<float>(bits(rng));
        while (!std::isfinite(v));
      }
    lov::write_flo(f, path);
    const auto g = lov::read_flo(path);
    bool same = g.height() == f.height() && g.width() == f.width();
    for (std::size_t i = 0; same && i < f.size(); ++i)
      same = std::bit_cast<std::uint32_t>(g.u_values()[i]) == std::bit_cast<std::uint32_t>(f.u_values()[i]) &&
             std::bit_cast<std::uint32_t>(g.v_values()[i]) == std::bit_cast<std::uint32_t>(f.v_values()[i]);
    mismatches += !same;
  }
  lov::write_flo(FlowField<float>(1, 1, lov::FlowResolution::Full, 1.5f, -2.0f), path);
  std::ifstream in(path, std::ios::binary);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  fs::remove(path);
  const std::vector<unsigned char> golden = {0x50, 0x49, 0x45, 0x48, 1, 0, 0, 0, 1, 0, 0, 0,
                                             0x00, 0x00, 0xc0, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  Outcome o;
  o.pass = mismatches == 0 && bytes == golden;
  o.detail = fmt("%d/%d random round trips bit-exact; 1x1 golden file %s (%zu bytes)", trips - mismatches, trips,
                 bytes == golden ? "byte-identical" : "differs", bytes.size());
  return o;
}

}  // namespace

int main() {
  bool all = true;
  all &= report(1, "channel counts", timed(channel_counts), 1);
  all &= report(2, "element counts", timed(element_counts), 1);

  struct Deterministic {
    int id;
    const char* name;
    Outcome (*fn)();
    double limit_s;
  };
  const Deterministic runs[] = {
      {3, "oracle equivalence", oracle_equivalence, 10},
      {4, "gradient suite", gradient_suite, 60},
      {5, "attention properties", attention_properties, 10},
      {6, "end-to-end convergence", convergence, 300},
      {7, "metrics and loss", metrics, 5},
  };
  std::vector<std::uint64_t> single;
  lov::set_num_threads(1);
  for (const auto& r : runs) {
    const auto o = timed(r.fn);
    all &= report(r.id, r.name, o, r.limit_s);
    single.push_back(o.digest);
  }
  lov::set_num_threads(0);

  all &= report(8, "flo I/O", timed(flo_io), 5);

  lov::set_num_threads(kThreadsN);
  int differing = 0;
  std::string which;
  for (std::size_t i = 0; i < std::size(runs); ++i)
    if (runs[i].fn().digest != single[i]) {
      ++differing;
      which += " " + std::to_string(runs[i].id);
    }
  lov::set_num_threads(0);
  Outcome det;
  det.pass = differing == 0;
  det.detail = differing == 0 ? fmt("criteria 3-7 bit-identical at 1 and %d threads", kThreadsN)
                              : fmt("criteria%s differ between 1 and %d threads", which.c_str(), kThreadsN);
  all &= report(9, "determinism", det, 0);
  return all ? 0 : 1;
}
