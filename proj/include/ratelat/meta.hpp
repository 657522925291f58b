#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratelat/betainc.hpp"
#include "ratelat/model.hpp"

namespace ratelat::meta {

// Distribution, across realizations of the interferer field, of the
// conditional transmission success probability (TSP). The first two
// moments have closed forms under the Poisson field / Rayleigh fading
// model, and the full law is approximated by the beta distribution that
// matches them.

struct TspMoments {
  double mu = 1.0;  // E[TSP]
  double nu = 1.0;  // E[TSP^2]
};

// Variance below this is treated as a point mass at mu; the matched beta
// shapes blow up in that limit.
inline constexpr double kDegenerateVarTol = 1e-12;

struct RateMeta {
  double mu = 1.0;
  double nu = 1.0;
  double beta_a = 0.0;  // matched beta shapes; unset when degenerate
  double beta_b = 0.0;
  bool degenerate = false;
};

struct MetaDistribution {
  std::vector<RateMeta> per_rate;  // index n-1 for rate n

  int num_rates() const { return static_cast<int>(per_rate.size()); }
  const RateMeta& rate(int n) const { return per_rate.at(n - 1); }
};

// First two TSP moments for decoding threshold `theta`:
//   E[TSP^b] = exp{ -Upsilon theta^{2/eta} sum_v (w_v/w_t)^{2/eta}
//                    kappa_v lambda_v c_b(kappa_v) }
// with c_1 = 1, c_2(kappa) = 2 - (1 - 2/eta) kappa and
// Upsilon = 2 pi^2 R_o^2 / (eta sin(2 pi / eta)).
inline TspMoments tsp_moments(const LinkConfig& link, const FieldConfig& field,
                              double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("tsp_moments: theta must be positive");
  const double eta = link.path_loss_exp;
  const double delta = 2.0 / eta;
  const double upsilon = 2.0 * std::numbers::pi * std::numbers::pi *
                         link.distance * link.distance /
                         (eta * std::sin(2.0 * std::numbers::pi / eta));
  double s1 = 0.0, s2 = 0.0;
  for (int v = 0; v < field.num_types(); ++v) {
    const double w_ratio = std::pow(field.powers[v] / link.tx_power, delta);
    const double kappa = field.activities[v];
    const double base = w_ratio * kappa * field.type_density(v);
    s1 += base;
    s2 += base * (2.0 - (1.0 - delta) * kappa);
  }
  const double scale = upsilon * std::pow(theta, delta);
  return {std::exp(-scale * s1), std::exp(-scale * s2)};
}

inline RateMeta make_rate_meta(const TspMoments& m) {
  RateMeta r;
  r.mu = m.mu;
  r.nu = m.nu;
  const double var = m.nu - m.mu * m.mu;
  if (var < kDegenerateVarTol) {
    r.degenerate = true;
    return r;
  }
  r.beta_a = m.mu * (m.mu - m.nu) / var;
  r.beta_b = (1.0 - m.mu) * (m.mu - m.nu) / var;
  return r;
}

inline MetaDistribution build_meta(const LinkConfig& link,
                                   const FieldConfig& field,
                                   const RateLadder& ladder) {
  MetaDistribution dist;
  dist.per_rate.reserve(ladder.num_rates());
  for (int n = 1; n <= ladder.num_rates(); ++n)
    dist.per_rate.push_back(
        make_rate_meta(tsp_moments(link, field, ladder.threshold(n))));
  return dist;
}

// P{TSP at rate n > gamma}: the meta-distribution CCDF. Degenerate rates
// short-circuit to a step at mu.
inline double meta_ccdf(const MetaDistribution& dist, int n, double gamma) {
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("meta_ccdf: gamma outside [0,1]");
  const RateMeta& r = dist.rate(n);
  if (r.degenerate) return gamma < r.mu ? 1.0 : 0.0;
  return 1.0 - reg_inc_beta(gamma, r.beta_a, r.beta_b);
}

// M equiprobable TSP classes per rate: class m spans [edge(m-1), edge(m)]
// and carries mass 1/M; its representative is the within-class median, so
// the CDF at rep(n, m) is (2m-1)/(2M). Class M is the best class.
struct TspGrid {
  int num_rates = 0;
  int num_classes = 0;
  std::vector<double> edges;  // (num_rates) x (num_classes+1), row-major
  std::vector<double> reps;   // (num_rates) x (num_classes), row-major

  double edge(int n, int m) const {  // m in 0..M
    return edges.at((n - 1) * (num_classes + 1) + m);
  }
  double rep(int n, int m) const {  // m in 1..M
    return reps.at((n - 1) * num_classes + (m - 1));
  }
  // TSPs for all rates within one class, indexed by rate.
  std::vector<double> class_column(int m) const {
    std::vector<double> col(num_rates);
    for (int n = 1; n <= num_rates; ++n) col[n - 1] = rep(n, m);
    return col;
  }
};

struct GridRow {
  std::vector<double> edges;  // M+1 entries
  std::vector<double> reps;   // M entries
};

inline GridRow discretize(const MetaDistribution& dist, int n, int M) {
  if (M < 1) throw std::invalid_argument("discretize: M must be at least 1");
  const RateMeta& r = dist.rate(n);
  GridRow row;
  row.edges.resize(M + 1);
  row.reps.resize(M);
  row.edges[0] = 0.0;
  row.edges[M] = 1.0;
  if (r.degenerate) {
    for (int m = 1; m < M; ++m) row.edges[m] = r.mu;
    for (int m = 1; m <= M; ++m) row.reps[m - 1] = r.mu;
    return row;
  }
  try {
    for (int m = 1; m < M; ++m)
      row.edges[m] =
          beta_quantile(static_cast<double>(m) / M, r.beta_a, r.beta_b);
    for (int m = 1; m <= M; ++m)
      row.reps[m - 1] = beta_quantile((2.0 * m - 1.0) / (2.0 * M), r.beta_a,
                                      r.beta_b);
  } catch (const std::runtime_error& err) {
    throw std::runtime_error("discretize: rate " + std::to_string(n) + ": " +
                             err.what());
  }
  return row;
}

inline TspGrid build_tsp_grid(const MetaDistribution& dist, int M) {
  TspGrid grid;
  grid.num_rates = dist.num_rates();
  grid.num_classes = M;
  grid.edges.reserve(grid.num_rates * (M + 1));
  grid.reps.reserve(grid.num_rates * M);
  for (int n = 1; n <= grid.num_rates; ++n) {
    GridRow row = discretize(dist, n, M);
    grid.edges.insert(grid.edges.end(), row.edges.begin(), row.edges.end());
    grid.reps.insert(grid.reps.end(), row.reps.begin(), row.reps.end());
  }
  return grid;
}

}  // namespace ratelat::meta
