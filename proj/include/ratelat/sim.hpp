#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ratelat/model.hpp"

namespace ratelat::sim {

using Matrix = Eigen::MatrixXd;

// Default truncation window for the interferer field. At the shipped
// densities and eta = 4 the neglected out-of-window interference moves the
// mean TSP by less than 1e-4, well under Monte Carlo noise.
inline constexpr double kDefaultWindowRadius = 5000.0;

// ---------------------------------------------------------------------------
// Seeding: every realization/run derives an independent stream from
// (master seed, index) so parallel execution stays bit-reproducible.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(seed + 0x9e3779b97f4a7c15ULL * stream));
}

// Uniform double in [0,1) from the top 53 bits of one engine draw. Faster
// and more portable than std::uniform_real_distribution, and it pins the
// draw count per sample, which the reproducibility contract cares about.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unit-mean exponential via inversion; uses 1 - U to avoid log(0).
inline double exp1(std::mt19937_64& rng) {
  return -std::log1p(-uniform01(rng));
}

// Runs fn(i) for i in [0, count) across a small thread pool; each index is
// independent and writes only to its own slot, so the result does not
// depend on the thread count.
template <class Fn>
void parallel_for_index(std::size_t count, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(hw, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    }));
  }
  for (auto& f : futs) f.get();
}

// ---------------------------------------------------------------------------
// Field realizations.
// ---------------------------------------------------------------------------

struct FieldPoint {
  double x = 0.0;  // meters, receiver at the origin
  double y = 0.0;
  int type = 0;  // 0-based device type
};

struct FieldRealization {
  std::vector<FieldPoint> points;
  double window_radius = kDefaultWindowRadius;
  std::vector<double> powers;      // per-type transmit power, Watts
  std::vector<double> activities;  // per-type activity factor
  std::uint64_t seed = 0;
};

// Samples one realization of the marked Poisson field: Poisson point count
// with mean lambda pi radius^2, locations uniform in the disk (rejection
// from the bounding square), marks independent of location.
inline FieldRealization sample_field(const FieldConfig& field,
                                     double window_radius,
                                     std::uint64_t seed) {
  if (!(window_radius > 0.0))
    throw std::invalid_argument("sample_field: window radius must be positive");
  FieldRealization real;
  real.window_radius = window_radius;
  real.powers = field.powers;
  real.activities = field.activities;
  real.seed = seed;

  auto rng = make_rng(seed);
  const double mean = field.density * M_PI * window_radius * window_radius;
  std::poisson_distribution<long> count_dist(mean);
  const long count = field.density > 0.0 ? count_dist(rng) : 0;

  std::vector<double> cum(field.type_probs.size());
  double acc = 0.0;
  for (std::size_t v = 0; v < cum.size(); ++v) {
    acc += field.type_probs[v];
    cum[v] = acc;
  }

  const double r2max = window_radius * window_radius;
  real.points.reserve(count);
  for (long i = 0; i < count; ++i) {
    FieldPoint pt;
    do {
      pt.x = (2.0 * uniform01(rng) - 1.0) * window_radius;
      pt.y = (2.0 * uniform01(rng) - 1.0) * window_radius;
    } while (pt.x * pt.x + pt.y * pt.y > r2max);
    const double uv = uniform01(rng);
    pt.type = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), uv) - cum.begin());
    if (pt.type >= static_cast<int>(cum.size()))
      pt.type = static_cast<int>(cum.size()) - 1;
    real.points.push_back(pt);
  }
  return real;
}

// Per-point interference weight s_i = (w_v / w_t) (R_o / r_i)^eta. The SIR
// with unit-mean fading is h / sum_i 1{active} s_i g_i.
struct InterferenceTerms {
  std::vector<double> weight;    // s_i
  std::vector<double> activity;  // kappa of the point's type
};

inline InterferenceTerms interference_terms(const FieldRealization& real,
                                            const LinkConfig& link) {
  InterferenceTerms terms;
  terms.weight.reserve(real.points.size());
  terms.activity.reserve(real.points.size());
  const double eta = link.path_loss_exp;
  const double half_eta = 0.5 * eta;
  const double ro2 = link.distance * link.distance;
  const bool eta4 = eta == 4.0;
  for (const FieldPoint& pt : real.points) {
    const double r2 = pt.x * pt.x + pt.y * pt.y;
    const double ratio = ro2 / r2;
    const double path = eta4 ? ratio * ratio : std::pow(ratio, half_eta);
    terms.weight.push_back(real.powers[pt.type] / link.tx_power * path);
    terms.activity.push_back(real.activities[pt.type]);
  }
  return terms;
}

// Conditional success probability given the realization, for one threshold:
// the product over interferers of kappa/(1 + theta s_i) + 1 - kappa.
inline double exact_tsp_from_terms(const InterferenceTerms& terms,
                                   double theta) {
  double prod = 1.0;
  for (std::size_t i = 0; i < terms.weight.size(); ++i) {
    const double kappa = terms.activity[i];
    prod *= kappa / (1.0 + theta * terms.weight[i]) + (1.0 - kappa);
  }
  return prod;
}

inline double exact_tsp(const FieldRealization& real, const LinkConfig& link,
                        double theta) {
  return exact_tsp_from_terms(interference_terms(real, link), theta);
}

inline std::vector<double> exact_tsp_all(const FieldRealization& real,
                                         const LinkConfig& link,
                                         const RateLadder& ladder) {
  const InterferenceTerms terms = interference_terms(real, link);
  std::vector<double> out(ladder.num_rates());
  for (int n = 1; n <= ladder.num_rates(); ++n)
    out[n - 1] = exact_tsp_from_terms(terms, ladder.threshold(n));
  return out;
}

// ---------------------------------------------------------------------------
// Slotted queue/fragmentation/rate-adaptation simulator.
// ---------------------------------------------------------------------------

struct QueueStats {
  double mean_queue_len = 0.0;  // sampled at slot boundaries
  std::size_t max_queue_len = 0;
  std::size_t final_queue_len = 0;
  bool divergent = false;
};

struct SimResult {
  std::vector<double> tsp_per_rate;      // exact TSPs of the realization
  std::vector<std::uint32_t> latencies;  // slots, post-warmup packets
  QueueStats queue;
  std::uint64_t seed = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t delivered = 0;
  std::vector<std::uint64_t> attempts;   // per rate index
  std::vector<std::uint64_t> successes;  // per rate index

  double mean_latency() const {
    if (latencies.empty()) return 0.0;
    double sum = 0.0;
    for (auto l : latencies) sum += l;
    return sum / latencies.size();
  }
};

namespace detail {

// Shared slot loop. Per slot: (1) if the buffer is nonempty, attempt the
// head-of-line fragment at the current rate and apply the adaptation rules;
// (2) draw the Bernoulli(alpha) arrival. A packet arriving in slot t gets
// its first attempt in slot t+1, and its latency is the index of its final
// success slot minus t (so a one-fragment packet on a clean channel scores
// exactly 1 slot).
template <class SuccessFn>
SimResult run_queue_loop(double alpha, int num_rates,
                         const SchemeConfig& scheme, std::uint64_t horizon,
                         std::uint64_t warmup, std::uint64_t seed,
                         SuccessFn&& attempt_success) {
  if (horizon <= warmup)
    throw std::invalid_argument("run_queue: horizon must exceed warmup");
  validate(scheme, num_rates);

  auto rng = make_rng(seed, 1);

  SimResult result;
  result.seed = seed;
  result.attempts.assign(num_rates, 0);
  result.successes.assign(num_rates, 0);

  const bool dynamic = scheme.kind == SchemeKind::Dynamic;
  int rate = dynamic ? (num_rates + 1) / 2 : scheme.static_rate;
  int frags_done = 0;
  std::deque<std::uint64_t> buffer;  // arrival slot per queued packet
  double queue_len_sum = 0.0;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    if (!buffer.empty()) {
      ++result.attempts[rate - 1];
      const bool ok = attempt_success(rate, rng);
      if (ok) {
        ++result.successes[rate - 1];
        ++frags_done;
        if (frags_done == rate) {
          const std::uint64_t arrived = buffer.front();
          buffer.pop_front();
          frags_done = 0;
          ++result.delivered;
          if (arrived >= warmup)
            result.latencies.push_back(static_cast<std::uint32_t>(t - arrived));
          if (dynamic && rate > 1 && uniform01(rng) < scheme.up_prob) --rate;
        }
      } else if (frags_done == 0 && dynamic && rate < num_rates &&
                 uniform01(rng) < scheme.down_prob) {
        ++rate;  // refragment the waiting packet at the slower rate
      }
    }
    if (uniform01(rng) < alpha) {
      buffer.push_back(t);
      ++result.arrivals;
    }
    queue_len_sum += static_cast<double>(buffer.size());
    result.queue.max_queue_len =
        std::max(result.queue.max_queue_len, buffer.size());
  }

  result.queue.mean_queue_len = queue_len_sum / static_cast<double>(horizon);
  result.queue.final_queue_len = buffer.size();
  result.queue.divergent =
      static_cast<double>(buffer.size()) >
      100.0 * alpha * std::sqrt(static_cast<double>(horizon)) + 100.0;
  return result;
}

}  // namespace detail

// Physical simulation on a fixed field realization: every attempt redraws
// the activity marks (Bernoulli kappa_v) and the Rayleigh power gains
// (Exp(1)) of all interferers plus the intended link, and tests the SIR
// against the rate's threshold.
inline SimResult run_queue(const FieldRealization& real,
                           const LinkConfig& link, const SchemeConfig& scheme,
                           std::uint64_t horizon_slots,
                           std::uint64_t warmup_slots, std::uint64_t seed) {
  const RateLadder ladder = build_rate_ladder(link);
  const InterferenceTerms terms = interference_terms(real, link);

  auto attempt = [&](int rate, std::mt19937_64& rng) {
    double interference = 0.0;
    for (std::size_t i = 0; i < terms.weight.size(); ++i)
      if (uniform01(rng) < terms.activity[i])
        interference += terms.weight[i] * exp1(rng);
    const double h = exp1(rng);
    return h > ladder.threshold(rate) * interference;
  };

  SimResult result =
      detail::run_queue_loop(link.arrival_prob, link.num_rates, scheme,
                             horizon_slots, warmup_slots, seed, attempt);
  result.tsp_per_rate = exact_tsp_all(real, link, ladder);
  return result;
}

// Matrix-model twin of run_queue: service successes are Bernoulli draws at
// fixed per-rate TSPs (one TSP class), all queue/adaptation logic shared.
inline SimResult run_queue_fixed_tsp(const std::vector<double>& tsp_per_rate,
                                     double alpha, const SchemeConfig& scheme,
                                     std::uint64_t horizon_slots,
                                     std::uint64_t warmup_slots,
                                     std::uint64_t seed) {
  const int num_rates = static_cast<int>(tsp_per_rate.size());
  auto attempt = [&](int rate, std::mt19937_64& rng) {
    return uniform01(rng) < tsp_per_rate[rate - 1];
  };
  SimResult result = detail::run_queue_loop(
      alpha, num_rates, scheme, horizon_slots, warmup_slots, seed, attempt);
  result.tsp_per_rate = tsp_per_rate;
  return result;
}

// ---------------------------------------------------------------------------
// Empirical meta distribution.
// ---------------------------------------------------------------------------

struct MetaEmpirical {
  std::vector<double> gammas;  // evaluation grid
  Matrix ccdf;                 // num_rates x gammas.size()
  Matrix tsps;                 // n_realizations x num_rates, raw samples

  double mean(int n) const { return tsps.col(n - 1).mean(); }
  double second_moment(int n) const {
    return tsps.col(n - 1).array().square().mean();
  }
};

// Survival function of the per-realization TSP across independent field
// realizations, per rate, on a fixed gamma grid with 0.01 steps.
// Realizations run in parallel on independent RNG streams.
inline MetaEmpirical empirical_meta(const LinkConfig& link,
                                    const FieldConfig& field,
                                    std::size_t n_realizations,
                                    std::uint64_t seed,
                                    double window_radius = kDefaultWindowRadius) {
  if (n_realizations < 1)
    throw std::invalid_argument("empirical_meta: need at least 1 realization");
  const RateLadder ladder = build_rate_ladder(link);
  const int num_rates = ladder.num_rates();

  MetaEmpirical out;
  out.tsps.resize(static_cast<Eigen::Index>(n_realizations), num_rates);
  parallel_for_index(n_realizations, [&](std::size_t i) {
    const FieldRealization real =
        sample_field(field, window_radius, splitmix64(seed) + i);
    const std::vector<double> tsp = exact_tsp_all(real, link, ladder);
    for (int n = 0; n < num_rates; ++n)
      out.tsps(static_cast<Eigen::Index>(i), n) = tsp[n];
  });

  const int grid_points = 101;  // 0.00, 0.01, ..., 1.00
  out.gammas.resize(grid_points);
  out.ccdf.setZero(num_rates, grid_points);
  for (int g = 0; g < grid_points; ++g) out.gammas[g] = g / 100.0;
  for (int n = 0; n < num_rates; ++n) {
    for (int g = 0; g < grid_points; ++g) {
      const double gamma = out.gammas[g];
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < out.tsps.rows(); ++i)
        if (out.tsps(i, n) > gamma) ++count;
      out.ccdf(n, g) =
          static_cast<double>(count) / static_cast<double>(out.tsps.rows());
    }
  }
  return out;
}

}  // namespace ratelat::sim
