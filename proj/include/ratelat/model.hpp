#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ratelat {

// All quantities below are SI (meters, seconds, Watts, Hz, bits). Unit
// conversion from file-level conveniences (mW, kHz, ms, bytes, km^-2)
// happens exactly once, in config_io.

// Intended-link and traffic parameters.
struct LinkConfig {
  double tx_power = 0.0;      // w_t, Watts
  double distance = 0.0;      // R_o, meters
  double path_loss_exp = 0.0; // eta, > 2
  double arrival_prob = 0.0;  // alpha, per-slot packet arrival probability
  double packet_bits = 0.0;   // L
  double bandwidth = 0.0;     // W, Hz
  double capacity_gap = 0.0;  // zeta, in (0,1]
  double slot_duration = 0.0; // T_s, seconds
  int num_rates = 0;          // N
  int num_classes = 0;        // M, TSP classes
};

// Heterogeneous interferer field: a marked Poisson point process where the
// mark picks the device type (power + activity factor).
struct FieldConfig {
  double density = 0.0;             // lambda, devices per m^2
  std::vector<double> type_probs;   // length V, sums to 1
  std::vector<double> powers;       // w_v, Watts
  std::vector<double> activities;   // kappa_v, in [0,1]

  int num_types() const { return static_cast<int>(type_probs.size()); }
  double type_density(int v) const { return type_probs.at(v) * density; }
};

enum class SchemeKind { Static, Dynamic };

// Rate-selection scheme. For Static, `static_rate` is the 1-based index of
// the rate held for the whole run; for Dynamic, `down_prob` shifts to the
// next slower rate after a first-fragment failure and `up_prob` to the next
// faster rate after a completed packet.
struct SchemeConfig {
  SchemeKind kind = SchemeKind::Dynamic;
  int static_rate = 1;
  double down_prob = 0.0;  // d
  double up_prob = 0.0;    // u
};

// The N transmission rates R_n = L/(n T_s) and their SIR decoding
// thresholds theta_n = 2^{L/(n zeta W T_s)} - 1. Index 0 is the fastest
// rate (one-slot packets); larger indices split the packet into more
// fragments.
struct RateLadder {
  std::vector<double> rates;       // bits/second, strictly decreasing
  std::vector<double> thresholds;  // strictly decreasing

  int num_rates() const { return static_cast<int>(rates.size()); }
  double rate(int n) const { return rates.at(n - 1); }            // 1-based
  double threshold(int n) const { return thresholds.at(n - 1); }  // 1-based
};

inline void validate(const LinkConfig& link) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("LinkConfig: " + msg);
  };
  if (!(link.tx_power > 0.0)) fail("tx_power must be positive");
  if (!(link.distance > 0.0)) fail("distance must be positive");
  if (!(link.path_loss_exp > 2.0)) fail("path_loss_exp must exceed 2");
  if (!(link.arrival_prob > 0.0 && link.arrival_prob < 1.0))
    fail("arrival_prob must lie in (0,1)");
  if (!(link.packet_bits > 0.0)) fail("packet_bits must be positive");
  if (!(link.bandwidth > 0.0)) fail("bandwidth must be positive");
  if (!(link.capacity_gap > 0.0 && link.capacity_gap <= 1.0))
    fail("capacity_gap must lie in (0,1]");
  if (!(link.slot_duration > 0.0)) fail("slot_duration must be positive");
  if (link.num_rates < 1) fail("num_rates must be at least 1");
  if (link.num_classes < 1) fail("num_classes must be at least 1");
  // A queue at the slowest rate needs at least 1/alpha slots per packet of
  // headroom, so more fragments than 1/alpha can never be stable.
  if (!(link.num_rates < 1.0 / link.arrival_prob))
    fail("num_rates must satisfy N < 1/arrival_prob");
}

inline void validate(const FieldConfig& field) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("FieldConfig: " + msg);
  };
  if (field.density < 0.0) fail("density must be nonnegative");
  const std::size_t v = field.type_probs.size();
  if (v == 0) fail("at least one device type required");
  if (field.powers.size() != v || field.activities.size() != v)
    fail("type_probs, powers, activities must have equal length");
  double sum = 0.0;
  for (double p : field.type_probs) {
    if (p < 0.0) fail("type probabilities must be nonnegative");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) fail("type probabilities must sum to 1");
  for (double w : field.powers)
    if (!(w > 0.0)) fail("type powers must be positive");
  for (double k : field.activities)
    if (k < 0.0 || k > 1.0) fail("activity factors must lie in [0,1]");
}

inline void validate(const SchemeConfig& scheme, int num_rates) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("SchemeConfig: " + msg);
  };
  if (scheme.kind == SchemeKind::Static) {
    if (scheme.static_rate < 1 || scheme.static_rate > num_rates)
      fail("static_rate outside 1..N");
  } else {
    if (scheme.down_prob < 0.0 || scheme.down_prob > 1.0)
      fail("down_prob must lie in [0,1]");
    if (scheme.up_prob < 0.0 || scheme.up_prob > 1.0)
      fail("up_prob must lie in [0,1]");
  }
}

// Builds the rate ladder from the link parameters. Rejects configurations
// whose threshold exponent L/(zeta W T_s) leaves the representable range.
inline RateLadder build_rate_ladder(const LinkConfig& link) {
  validate(link);
  const double exponent =
      link.packet_bits /
      (link.capacity_gap * link.bandwidth * link.slot_duration);
  RateLadder ladder;
  ladder.rates.reserve(link.num_rates);
  ladder.thresholds.reserve(link.num_rates);
  for (int n = 1; n <= link.num_rates; ++n) {
    const double theta = std::exp2(exponent / n) - 1.0;
    if (!std::isfinite(theta) || !(theta > 0.0))
      throw std::domain_error(
          "build_rate_ladder: infeasible ladder, threshold exponent " +
          std::to_string(exponent / n) + " at n=" + std::to_string(n));
    ladder.rates.push_back(link.packet_bits / (n * link.slot_duration));
    ladder.thresholds.push_back(theta);
  }
  return ladder;
}

// Default network parameterization used throughout the docs and tests:
// lambda = 1e3 devices/km^2 over V=3 equally likely types with activity
// factors {0.1, 0.3, 0.5} and powers {10, 7, 5} mW; alpha = 0.04,
// W = 100 kHz, zeta = 0.8, T_s = 1 ms, eta = 4, R_o = 20 m, N = 5 rates,
// M = 8 classes, L = 40 bytes, d = 0.3, u = 0.1. The intended transmit
// power is the caller's choice (10 or 50 mW in the shipped experiments).
struct DefaultConfig {
  LinkConfig link;
  FieldConfig field;
  SchemeConfig scheme;
};

inline DefaultConfig default_paper_config(double tx_power_mw = 10.0) {
  DefaultConfig cfg;
  cfg.link.tx_power = tx_power_mw * 1e-3;
  cfg.link.distance = 20.0;
  cfg.link.path_loss_exp = 4.0;
  cfg.link.arrival_prob = 0.04;
  cfg.link.packet_bits = 320.0;
  cfg.link.bandwidth = 1e5;
  cfg.link.capacity_gap = 0.8;
  cfg.link.slot_duration = 1e-3;
  cfg.link.num_rates = 5;
  cfg.link.num_classes = 8;

  cfg.field.density = 1e-3;  // 1e3 per km^2
  cfg.field.type_probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  cfg.field.powers = {10e-3, 7e-3, 5e-3};
  cfg.field.activities = {0.1, 0.3, 0.5};

  cfg.scheme.kind = SchemeKind::Dynamic;
  cfg.scheme.down_prob = 0.3;
  cfg.scheme.up_prob = 0.1;
  return cfg;
}

}  // namespace ratelat
