#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratelat/chains.hpp"
#include "ratelat/config_io.hpp"
#include "ratelat/csv.hpp"
#include "ratelat/meta.hpp"
#include "ratelat/model.hpp"
#include "ratelat/qbd.hpp"
#include "ratelat/sim.hpp"

namespace ratelat::experiments {

enum class Kind { MetaCurves, LatencyPerClass, LatencyVsPacketSize, Simulate };

// One experiment invocation: base config plus sparse overrides, a sweep
// axis for the packet-size experiment, output location and master seed.
// Overrides and sweep values are validated against the config schema when
// they are applied.
struct ExperimentSpec {
  Kind kind = Kind::MetaCurves;
  FileConfig config;
  std::vector<std::string> overrides;
  std::string sweep_key = "link.packet_bytes";
  std::vector<double> sweep_values;  // defaulted per experiment when empty
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  std::size_t realizations = 5000;   // field realizations (meta curves)
  std::uint64_t horizon_slots = 20000;  // simulate
  std::uint64_t warmup_slots = 2000;    // simulate
  double window_radius = sim::kDefaultWindowRadius;
};

inline FileConfig resolved_config(const ExperimentSpec& spec) {
  FileConfig cfg = spec.config;
  apply_overrides(cfg, spec.overrides);
  return cfg;
}

inline void write_config_header(csv::Writer& w, const std::string& name,
                                const FileConfig& cfg, std::uint64_t seed) {
  w.comment("ratelat " + name);
  w.comment("seed = " + std::to_string(seed));
  for (const auto& [key, value] : config_entries(cfg))
    w.comment(key + " = " + value);
}

// ---------------------------------------------------------------------------
// Meta-distribution curves: analytical beta-approximation CCDF per rate on
// the gamma grid next to the empirical CCDF over `realizations` field
// samples, plus the per-rate sup distance between the two.
// ---------------------------------------------------------------------------

struct MetaCurvesResult {
  std::vector<double> sup_distance;  // per rate
  std::filesystem::path csv_path;
};

inline MetaCurvesResult run_meta_curves(const ExperimentSpec& spec) {
  const FileConfig cfg = resolved_config(spec);
  const DefaultConfig si = materialize(cfg);
  const RateLadder ladder = build_rate_ladder(si.link);
  const meta::MetaDistribution dist =
      meta::build_meta(si.link, si.field, ladder);
  const sim::MetaEmpirical emp = sim::empirical_meta(
      si.link, si.field, spec.realizations, spec.seed, spec.window_radius);

  const int num_rates = ladder.num_rates();
  MetaCurvesResult result;
  result.sup_distance.assign(num_rates, 0.0);

  std::vector<std::vector<double>> analytic(num_rates);
  for (int n = 1; n <= num_rates; ++n) {
    analytic[n - 1].resize(emp.gammas.size());
    for (std::size_t g = 0; g < emp.gammas.size(); ++g) {
      const double a = meta::meta_ccdf(dist, n, emp.gammas[g]);
      analytic[n - 1][g] = a;
      result.sup_distance[n - 1] = std::max(
          result.sup_distance[n - 1],
          std::fabs(a - emp.ccdf(n - 1, static_cast<Eigen::Index>(g))));
    }
  }

  result.csv_path = spec.out_dir / "meta_curves.csv";
  csv::Writer w(result.csv_path);
  write_config_header(w, "meta", cfg, spec.seed);
  w.comment("realizations = " + std::to_string(spec.realizations));
  w.row("rate_index", "gamma", "ccdf_analytic", "ccdf_empirical",
        "sup_distance");
  for (int n = 1; n <= num_rates; ++n)
    for (std::size_t g = 0; g < emp.gammas.size(); ++g)
      w.row(n, emp.gammas[g], analytic[n - 1][g],
            emp.ccdf(n - 1, static_cast<Eigen::Index>(g)),
            result.sup_distance[n - 1]);
  w.close();
  return result;
}

// ---------------------------------------------------------------------------
// Per-class latency table: every static rate plus the dynamic scheme,
// against the TSP classes of the resolved config.
// ---------------------------------------------------------------------------

struct LatencyPerClassResult {
  std::vector<chains::LatencyTable> static_tables;  // index n-1
  chains::LatencyTable dynamic_table;
  meta::TspGrid grid;
  std::filesystem::path csv_path;
};

inline LatencyPerClassResult compute_latency_per_class(const DefaultConfig& si) {
  const RateLadder ladder = build_rate_ladder(si.link);
  const meta::MetaDistribution dist =
      meta::build_meta(si.link, si.field, ladder);
  LatencyPerClassResult result;
  result.grid = meta::build_tsp_grid(dist, si.link.num_classes);
  for (int n = 1; n <= si.link.num_rates; ++n)
    result.static_tables.push_back(
        chains::latency_static(result.grid, si.link, n));
  result.dynamic_table = chains::latency_dynamic(
      result.grid, si.link, si.scheme.down_prob, si.scheme.up_prob);
  return result;
}

inline LatencyPerClassResult run_latency_per_class(const ExperimentSpec& spec) {
  const FileConfig cfg = resolved_config(spec);
  const DefaultConfig si = materialize(cfg);
  LatencyPerClassResult result = compute_latency_per_class(si);

  result.csv_path = spec.out_dir / "latency_per_class.csv";
  csv::Writer w(result.csv_path);
  write_config_header(w, "latency-class", cfg, spec.seed);
  w.row("scheme", "rate_index_or_dyn", "class_index", "stable_flag",
        "tx_latency", "total_latency", "stability_threshold");
  const double threshold = 1.0 / si.link.arrival_prob;
  for (int n = 1; n <= si.link.num_rates; ++n)
    for (const chains::ClassLatency& c : result.static_tables[n - 1].classes)
      w.row("static", n, c.class_index, c.stable, c.tx_latency,
            c.total_latency, threshold);
  for (const chains::ClassLatency& c : result.dynamic_table.classes)
    w.row("dynamic", "dyn", c.class_index, c.stable, c.tx_latency,
          c.total_latency, threshold);
  w.close();
  return result;
}

// ---------------------------------------------------------------------------
// Spatially averaged latency vs packet size: rebuilds the rate ladder and
// TSP grid at every sweep point. Averages run over stable classes, with the
// instability fraction reported alongside.
// ---------------------------------------------------------------------------

struct SweepPoint {
  double packet_bytes = 0.0;
  std::vector<double> static_avg;        // per rate, stable classes only
  std::vector<int> static_unstable;      // per rate
  double dynamic_avg = 0.0;
  int dynamic_unstable = 0;
  // 1-based rate index minimizing the stable-class average; 0 if none finite
  int best_static_rate = 0;
};

struct LatencySweepResult {
  std::vector<SweepPoint> points;
  std::filesystem::path csv_path;
};

inline std::vector<double> default_packet_sweep() {
  std::vector<double> values;
  for (double b = 20.0; b <= 120.0; b += 5.0) values.push_back(b);
  return values;
}

inline LatencySweepResult run_latency_vs_packet_size(
    const ExperimentSpec& spec) {
  FileConfig cfg = resolved_config(spec);
  const std::vector<double> sweep =
      spec.sweep_values.empty() ? default_packet_sweep() : spec.sweep_values;

  LatencySweepResult result;
  result.csv_path = spec.out_dir / "latency_vs_packet_size.csv";
  csv::Writer w(result.csv_path);
  write_config_header(w, "latency-size", cfg, spec.seed);
  w.comment("sweep_key = " + spec.sweep_key);
  w.row("packet_bytes", "scheme", "rate_index_or_dyn", "avg_latency",
        "unstable_classes", "instability_fraction");

  for (double value : sweep) {
    set_config_key(cfg, spec.sweep_key.substr(0, spec.sweep_key.find('.')),
                   spec.sweep_key.substr(spec.sweep_key.find('.') + 1),
                   csv::fmt(value));
    const DefaultConfig si = materialize(cfg);
    const LatencyPerClassResult tables = compute_latency_per_class(si);

    SweepPoint pt;
    pt.packet_bytes = si.link.packet_bits / 8.0;
    double best = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= si.link.num_rates; ++n) {
      const chains::LatencyTable& t = tables.static_tables[n - 1];
      pt.static_avg.push_back(t.avg_stable);
      pt.static_unstable.push_back(t.unstable_count);
      if (t.avg_stable < best) {
        best = t.avg_stable;
        pt.best_static_rate = n;
      }
      w.row(pt.packet_bytes, "static", n, t.avg_stable, t.unstable_count,
            t.instability_fraction());
    }
    pt.dynamic_avg = tables.dynamic_table.avg_stable;
    pt.dynamic_unstable = tables.dynamic_table.unstable_count;
    w.row(pt.packet_bytes, "dynamic", "dyn", pt.dynamic_avg,
          pt.dynamic_unstable, tables.dynamic_table.instability_fraction());
    result.points.push_back(std::move(pt));
  }
  w.close();
  return result;
}

// ---------------------------------------------------------------------------
// Forward simulation on one sampled field realization, with the resolved
// scheme. Emits raw latency samples plus a sidecar metadata file.
// ---------------------------------------------------------------------------

struct SimulateResult {
  sim::SimResult sim;
  std::filesystem::path csv_path;
  std::filesystem::path meta_path;
};

inline SimulateResult run_simulate(const ExperimentSpec& spec) {
  const FileConfig cfg = resolved_config(spec);
  const DefaultConfig si = materialize(cfg);
  const sim::FieldRealization real =
      sim::sample_field(si.field, spec.window_radius, spec.seed);
  SimulateResult result;
  result.sim = sim::run_queue(real, si.link, si.scheme, spec.horizon_slots,
                              spec.warmup_slots, spec.seed);

  result.csv_path = spec.out_dir / "sim_latency_samples.csv";
  csv::Writer w(result.csv_path);
  write_config_header(w, "simulate", cfg, spec.seed);
  w.row("sample_index", "latency_slots");
  for (std::size_t i = 0; i < result.sim.latencies.size(); ++i)
    w.row(i, static_cast<std::size_t>(result.sim.latencies[i]));
  w.close();

  result.meta_path = spec.out_dir / "sim_realization.meta";
  std::ofstream meta(result.meta_path);
  if (!meta)
    throw std::runtime_error("simulate: cannot write '" +
                             result.meta_path.string() + "'");
  meta << "[realization]\n";
  meta << "seed = " << spec.seed << "\n";
  meta << "point_count = " << real.points.size() << "\n";
  meta << "window_radius_m = " << csv::fmt(real.window_radius) << "\n";
  meta << "horizon_slots = " << spec.horizon_slots << "\n";
  meta << "warmup_slots = " << spec.warmup_slots << "\n";
  meta << "arrivals = " << result.sim.arrivals << "\n";
  meta << "delivered = " << result.sim.delivered << "\n";
  meta << "mean_queue_len = " << csv::fmt(result.sim.queue.mean_queue_len)
       << "\n";
  meta << "final_queue_len = " << result.sim.queue.final_queue_len << "\n";
  meta << "divergent = " << (result.sim.queue.divergent ? 1 : 0) << "\n";
  for (std::size_t n = 0; n < result.sim.tsp_per_rate.size(); ++n)
    meta << "tsp_rate_" << (n + 1) << " = "
         << csv::fmt(result.sim.tsp_per_rate[n]) << "\n";
  meta.close();
  return result;
}

// Emits the TSP grid with its per-rate beta parameters as CSV.
inline std::filesystem::path write_tsp_grid_csv(
    const std::filesystem::path& out_dir, const FileConfig& cfg,
    std::uint64_t seed) {
  const DefaultConfig si = materialize(cfg);
  const RateLadder ladder = build_rate_ladder(si.link);
  const meta::MetaDistribution dist =
      meta::build_meta(si.link, si.field, ladder);
  const meta::TspGrid grid = meta::build_tsp_grid(dist, si.link.num_classes);

  const std::filesystem::path path = out_dir / "tsp_grid.csv";
  csv::Writer w(path);
  write_config_header(w, "tsp-grid", cfg, seed);
  for (int n = 1; n <= grid.num_rates; ++n) {
    const meta::RateMeta& r = dist.rate(n);
    w.comment("rate " + std::to_string(n) + ": mu = " + csv::fmt(r.mu) +
              ", nu = " + csv::fmt(r.nu) + ", beta_a = " + csv::fmt(r.beta_a) +
              ", beta_b = " + csv::fmt(r.beta_b));
  }
  w.row("rate_index", "class_index", "omega_lo", "omega_hi", "p_nm");
  for (int n = 1; n <= grid.num_rates; ++n)
    for (int m = 1; m <= grid.num_classes; ++m)
      w.row(n, m, grid.edge(n, m - 1), grid.edge(n, m), grid.rep(n, m));
  w.close();
  return path;
}

}  // namespace ratelat::experiments
