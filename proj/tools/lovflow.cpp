// lovflow: flow estimation, cost-volume benchmarks and gradient checks.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lov/bench.hpp"
#include "lov/gradcheck.hpp"
#include "lov/io.hpp"
#include "lov/png_io.hpp"
#include "lov/solver.hpp"
#include "lov/visualize.hpp"

namespace {

struct FlowArgs {
  std::string source;
  std::string target;
  std::string output;
  std::string viz;
  std::string gt;
  int iterations = 24;
  std::string schedule = "default";
  double beta = lov::SolverConfig{}.beta;
  double alpha = lov::SolverConfig{}.alpha;
  int aggregation = lov::SolverConfig{}.aggregation_radius;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct BenchArgs {
  std::vector<std::string> resolutions{"448x1024", "1080x1920", "2160x3840"};
  std::vector<std::string> representations{"LocalOrthogonal", "Local2D", "Global1D", "AllPairs4D"};
  int repeats = 5;
  std::string output;
  std::string format = "csv";
  std::uint64_t cap = std::uint64_t{1} << 28;
  std::uint64_t seed = 0;
  bool no_estimate = false;
};

struct GradArgs {
  int seeds = 20;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

int run_flow(const FlowArgs& a) {
  lov::SolverConfig config;
  config.iterations = a.iterations;
  config.schedule = lov::LookupSchedule::from_name(a.schedule);
  config.beta = a.beta;
  config.alpha = a.alpha;
  config.aggregation_radius = a.aggregation;
  config.attention.seed = a.seed;
  config.validate();

  const auto src_full = lov::read_image(a.source);
  const auto tgt_full = lov::read_image(a.target);
  if (src_full.height != tgt_full.height || src_full.width != tgt_full.width)
    throw std::runtime_error("image sizes differ: " + a.source + " is " + std::to_string(src_full.width) + "x" +
                             std::to_string(src_full.height) + ", " + a.target + " is " +
                             std::to_string(tgt_full.width) + "x" + std::to_string(tgt_full.height));
  const auto src = lov::crop_to_multiple(src_full, 32);
  const auto tgt = lov::crop_to_multiple(tgt_full, 32);
  if (src.height == 0 || src.width == 0) throw std::runtime_error("images must be at least 32x32");
  if (a.verbose && (src.height != src_full.height || src.width != src_full.width))
    std::cerr << "cropped to " << src.width << "x" << src.height << "\n";

  lov::FlowSequence<float> sequence;
  const auto flow = lov::estimate_flow<float>(src, tgt, config, &sequence);
  if (a.verbose) {
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      double mean = 0;
      for (std::size_t p = 0; p < sequence[i].size(); ++p)
        mean += std::hypot(sequence[i].u_values()[p], sequence[i].v_values()[p]);
      std::cerr << "iteration " << i + 1 << ": mean |flow| " << mean / static_cast<double>(sequence[i].size())
                << "\n";
    }
    std::cerr << "flow sequence length: " << sequence.size() << "\n";
  }
  lov::write_flo(flow, a.output);
  if (!a.viz.empty()) lov::write_png(lov::visualize_flow(flow), a.viz);

  if (!a.gt.empty()) {
    const auto gt_full = lov::read_flo(a.gt);
    if (gt_full.height() < flow.height() || gt_full.width() < flow.width())
      throw std::runtime_error(a.gt + ": ground truth is smaller than the estimated flow");
    lov::FlowField<float> gt(flow.height(), flow.width(), lov::FlowResolution::Full);
    for (int y = 0; y < flow.height(); ++y)
      for (int x = 0; x < flow.width(); ++x) {
        gt.u(y, x) = gt_full.u(y, x);
        gt.v(y, x) = gt_full.v(y, x);
      }
    const auto report = lov::evaluate(flow, gt);
    std::printf("EPE %.4f  F1-all %.2f%%\n", report.epe, report.f1_all);
  }
  return 0;
}

int run_bench(const BenchArgs& a) {
  lov::bench::Config config;
  for (const auto& r : a.resolutions) config.resolutions.push_back(lov::bench::parse_resolution(r));
  config.kinds.clear();
  for (const auto& k : a.representations) config.kinds.push_back(lov::bench::parse_kind(k));
  config.repeats = a.repeats;
  config.construction_cap = a.cap;
  config.seed = a.seed;
  config.time_estimate = !a.no_estimate;

  const auto rows = lov::bench::run(config);
  const std::string text = a.format == "json" ? lov::bench::to_json(rows).dump(2) + "\n" : lov::bench::to_csv(rows);
  if (a.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(a.output);
    if (!out) throw std::runtime_error("cannot write " + a.output);
    out << text;
  }
  std::cout << lov::bench::summary(rows);
  return 0;
}

int run_gradcheck(const GradArgs& a) {
  std::vector<lov::gradcheck::CaseResult> results;
  for (int i = 0; i < a.seeds; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    results.push_back(lov::gradcheck::check_attention(seed));
    results.push_back(lov::gradcheck::check_lov(seed));
  }
  int failures = 0;
  const lov::gradcheck::CaseResult* worst = nullptr;
  for (const auto& r : results) {
    if (!worst || r.max_relative_error > worst->max_relative_error) worst = &r;
    if (!(r.max_relative_error < a.tolerance)) {
      ++failures;
      std::fprintf(stderr, "FAIL %s seed %llu: max relative error %.3e\n", r.op.c_str(),
                   static_cast<unsigned long long>(r.seed), r.max_relative_error);
    }
  }
  if (worst)
    std::printf("worst: %s seed %llu max relative error %.6e (tolerance %.1e)\n", worst->op.c_str(),
                static_cast<unsigned long long>(worst->seed), worst->max_relative_error, a.tolerance);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local orthogonal cost volume flow estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware count)")->check(CLI::NonNegativeNumber);

  FlowArgs flow;
  auto* flow_cmd = app.add_subcommand("flow", "Estimate flow between two images");
  flow_cmd->add_option("source", flow.source, "Source image (PNG, PGM or PPM)")->required();
  flow_cmd->add_option("target", flow.target, "Target image")->required();
  flow_cmd->add_option("output", flow.output, "Output .flo path")->required();
  flow_cmd->add_option("--viz", flow.viz, "Write a colour-coded PNG of the flow");
  flow_cmd->add_option("--gt", flow.gt, "Ground-truth .flo; prints EPE");
  flow_cmd->add_option("--iterations", flow.iterations, "Update iterations")->check(CLI::PositiveNumber);
  flow_cmd->add_option("--radius-schedule", flow.schedule, "Lookup schedule")
      ->check(CLI::IsMember({"default", "level0-only"}));
  flow_cmd->add_option("--beta", flow.beta, "Soft-argmax inverse temperature");
  flow_cmd->add_option("--alpha", flow.alpha, "Update damping in (0, 1]");
  flow_cmd->add_option("--aggregation", flow.aggregation, "Aggregation radius in 1/8 cells (0 = off)");
  flow_cmd->add_option("--seed", flow.seed, "Seed for attention projections");
  flow_cmd->add_flag("--verbose", flow.verbose, "Log per-iteration progress to stderr");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark cost-volume representations");
  bench_cmd->add_option("--resolutions", bench.resolutions, "HxW input sizes or feat:HxW feature grids");
  bench_cmd->add_option("--representations", bench.representations,
                        "LocalOrthogonal, Local2D, Global1D, AllPairs4D");
  bench_cmd->add_option("--repeats", bench.repeats, "Repeats per measurement")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--output", bench.output, "Report path (default: stdout)");
  bench_cmd->add_option("--format", bench.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--cap", bench.cap, "Largest element count that is actually constructed");
  bench_cmd->add_option("--seed", bench.seed, "Seed for synthetic features");
  bench_cmd->add_flag("--no-estimate", bench.no_estimate, "Skip full estimate_flow timing");

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of the backward passes");
  grad_cmd->add_option("--seeds", grad.seeds, "Number of seeds per operator")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad.seed, "First seed");
  grad_cmd->add_option("--tolerance", grad.tolerance, "Maximum allowed relative error");

  CLI11_PARSE(app, argc, argv);
  try {
    lov::set_num_threads(threads);
    if (*flow_cmd) return run_flow(flow);
    if (*bench_cmd) return run_bench(bench);
    if (*grad_cmd) return run_gradcheck(grad);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
