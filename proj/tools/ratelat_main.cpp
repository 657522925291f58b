// Command-line front end: meta-distribution curves, per-class latency
// tables, packet-size sweeps and forward simulation, all emitting CSV with
// the resolved configuration embedded as header comments.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ratelat/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "Configuration file (key-value sections)");
  cmd->add_option("-o,--out", args.out_dir,
                  "Output directory (default: $RATELAT_OUT_DIR or '.')");
  cmd->add_option("-s,--seed", args.seed, "Master RNG seed")
      ->default_val(std::uint64_t{1});
  cmd->add_option("--override", args.overrides,
                  "Config override as section.key=value (repeatable)");
}

ratelat::experiments::ExperimentSpec make_spec(
    const CommonArgs& args, ratelat::experiments::Kind kind) {
  ratelat::experiments::ExperimentSpec spec;
  spec.kind = kind;
  if (!args.config_path.empty())
    spec.config = ratelat::load_config(args.config_path);
  spec.overrides = args.overrides;
  spec.seed = args.seed;
  if (!args.out_dir.empty()) {
    spec.out_dir = args.out_dir;
  } else if (const char* env = std::getenv("RATELAT_OUT_DIR")) {
    spec.out_dir = env;
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ratelat: packet latency under rate adaptation in slotted IoT "
      "networks"};
  app.require_subcommand(1);

  CommonArgs meta_args, class_args, size_args, sim_args;

  auto* meta_cmd = app.add_subcommand(
      "meta", "Analytical vs empirical meta distribution of the TSP");
  add_common(meta_cmd, meta_args);
  std::size_t realizations = 5000;
  meta_cmd->add_option("-r,--realizations", realizations,
                       "Field realizations for the empirical curve")
      ->default_val(std::size_t{5000});
  bool emit_grid = false;
  meta_cmd->add_flag("--grid", emit_grid,
                     "Also emit the discretized TSP grid (tsp_grid.csv)");

  auto* class_cmd = app.add_subcommand(
      "latency-class", "Per-TSP-class latency for every scheme");
  add_common(class_cmd, class_args);

  auto* size_cmd = app.add_subcommand(
      "latency-size", "Spatially averaged latency vs packet size");
  add_common(size_cmd, size_args);
  double sweep_from = 20.0, sweep_to = 120.0, sweep_step = 5.0;
  size_cmd->add_option("--from", sweep_from, "Sweep start, bytes")
      ->default_val(20.0);
  size_cmd->add_option("--to", sweep_to, "Sweep end, bytes")->default_val(120.0);
  size_cmd->add_option("--step", sweep_step, "Sweep step, bytes")
      ->default_val(5.0);

  auto* sim_cmd = app.add_subcommand(
      "simulate", "Forward-simulate one field realization");
  add_common(sim_cmd, sim_args);
  std::uint64_t horizon = 20000, warmup = 2000;
  double window_radius = ratelat::sim::kDefaultWindowRadius;
  sim_cmd->add_option("--horizon", horizon, "Simulated slots")
      ->default_val(std::uint64_t{20000});
  sim_cmd->add_option("--warmup", warmup,
                      "Slots discarded from latency statistics")
      ->default_val(std::uint64_t{2000});
  sim_cmd->add_option("--window-radius", window_radius,
                      "Field truncation radius, meters")
      ->default_val(ratelat::sim::kDefaultWindowRadius);

  CLI11_PARSE(app, argc, argv);

  try {
    using ratelat::experiments::Kind;
    if (meta_cmd->parsed()) {
      auto spec = make_spec(meta_args, Kind::MetaCurves);
      spec.realizations = realizations;
      const auto result = ratelat::experiments::run_meta_curves(spec);
      std::cout << "wrote " << result.csv_path.string() << "\n";
      for (std::size_t n = 0; n < result.sup_distance.size(); ++n)
        std::cout << "rate " << (n + 1)
                  << " sup|analytic - empirical| = " << result.sup_distance[n]
                  << "\n";
      if (emit_grid) {
        const auto grid_path = ratelat::experiments::write_tsp_grid_csv(
            spec.out_dir, ratelat::experiments::resolved_config(spec),
            spec.seed);
        std::cout << "wrote " << grid_path.string() << "\n";
      }
    } else if (class_cmd->parsed()) {
      auto spec = make_spec(class_args, Kind::LatencyPerClass);
      const auto result = ratelat::experiments::run_latency_per_class(spec);
      std::cout << "wrote " << result.csv_path.string() << "\n";
    } else if (size_cmd->parsed()) {
      auto spec = make_spec(size_args, Kind::LatencyVsPacketSize);
      if (!(sweep_step > 0.0) || sweep_to < sweep_from)
        throw std::invalid_argument("latency-size: bad sweep range");
      for (double b = sweep_from; b <= sweep_to + 1e-9; b += sweep_step)
        spec.sweep_values.push_back(b);
      const auto result =
          ratelat::experiments::run_latency_vs_packet_size(spec);
      std::cout << "wrote " << result.csv_path.string() << "\n";
    } else if (sim_cmd->parsed()) {
      auto spec = make_spec(sim_args, Kind::Simulate);
      spec.horizon_slots = horizon;
      spec.warmup_slots = warmup;
      spec.window_radius = window_radius;
      const auto result = ratelat::experiments::run_simulate(spec);
      std::cout << "wrote " << result.csv_path.string() << " and "
                << result.meta_path.string() << "\n";
      std::cout << "delivered " << result.sim.delivered << "/"
                << result.sim.arrivals << " packets, mean latency "
                << result.sim.mean_latency() << " slots"
                << (result.sim.queue.divergent ? " (divergent queue)" : "")
                << "\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
