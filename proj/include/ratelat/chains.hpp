#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratelat/meta.hpp"
#include "ratelat/model.hpp"
#include "ratelat/qbd.hpp"

namespace ratelat::chains {

using qbd::Matrix;
using qbd::RowVector;
using qbd::Vector;

// ---------------------------------------------------------------------------
// Static rate: the slots needed to push all n fragments of a packet through
// a channel with per-slot success probability p follow a discrete phase-type
// law. Phase i means "fragment i is in the air"; each slot either advances
// (prob p) or retries (prob 1-p), and absorption happens off phase n.
// ---------------------------------------------------------------------------

struct StaticChain {
  int n = 1;
  double p = 1.0;
  RowVector beta;  // 1 x n, starts at phase 1
  Matrix T;        // n x n transient part, upper bidiagonal
  Vector s;        // n x 1 absorption column, e - T e
};

inline StaticChain make_static_chain(double p, int n) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("make_static_chain: p outside (0,1]");
  if (n < 1) throw std::invalid_argument("make_static_chain: n must be >= 1");
  StaticChain c;
  c.n = n;
  c.p = p;
  c.beta = RowVector::Zero(n);
  c.beta(0) = 1.0;
  c.T = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    c.T(i, i) = 1.0 - p;
    if (i + 1 < n) c.T(i, i + 1) = p;
  }
  c.s = Vector::Ones(n) - c.T * Vector::Ones(n);
  return c;
}

// P{absorption takes exactly k slots} = beta T^{k-1} s.
inline double absorption_pmf(const StaticChain& c, long k) {
  if (k < 1) return 0.0;
  RowVector v = c.beta;
  for (long i = 1; i < k; ++i) v = v * c.T;
  return (v * c.s).value();
}

// E{slots to deliver a packet} = beta (I - T)^{-1} e; equals n/p here.
inline double mean_absorption(const StaticChain& c) {
  const Matrix ident = Matrix::Identity(c.n, c.n);
  return (c.beta * (ident - c.T).partialPivLu().solve(Vector::Ones(c.n)))
      .value();
}

// Geo/PH/1 blocks for a static rate: arrivals are Bernoulli(alpha), service
// is the phase-type law above, level = packets in the buffer.
inline qbd::QbdSpec build_static(double p, int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("build_static: alpha outside (0,1)");
  const StaticChain c = make_static_chain(p, n);
  const double ab = 1.0 - alpha;
  qbd::QbdSpec spec;
  spec.B = Matrix::Constant(1, 1, ab);
  spec.C = alpha * c.beta;
  spec.E = ab * c.s;
  spec.A0 = alpha * c.T;
  spec.A1 = alpha * c.s * c.beta + ab * c.T;
  spec.A2 = ab * c.s * c.beta;
  return spec;
}

// Closed-form rate matrix for the static chain. Because every level-down
// transition re-enters service through beta, the G matrix is e beta and R
// admits the explicit form alpha T (I - alpha s beta - (1-alpha) T
// - alpha T e beta)^{-1}.
inline Matrix static_rate_matrix_closed_form(double p, int n, double alpha) {
  const StaticChain c = make_static_chain(p, n);
  const double ab = 1.0 - alpha;
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix den = ident - alpha * c.s * c.beta - ab * c.T -
                     alpha * c.T * Vector::Ones(n) * c.beta;
  return alpha * c.T * den.partialPivLu().inverse();
}

// Full closed-form steady state of the static chain (boundary is scalar):
//   pi0 = (1 + alpha beta Z (I-R)^{-1} e)^{-1},  pi1 = pi0 alpha beta Z,
//   Z = (I - alpha s beta - (1-alpha) T - R (1-alpha) s beta)^{-1}.
inline qbd::SteadyState static_steady_state_closed_form(double p, int n,
                                                        double alpha) {
  const StaticChain c = make_static_chain(p, n);
  const double ab = 1.0 - alpha;
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix R = static_rate_matrix_closed_form(p, n, alpha);
  const Matrix Z = (ident - alpha * c.s * c.beta - ab * c.T -
                    R * (ab * c.s * c.beta))
                       .partialPivLu()
                       .inverse();
  const Vector tail = (ident - R).partialPivLu().solve(Vector::Ones(n));
  const double pi0 = 1.0 / (1.0 + alpha * (c.beta * Z * tail).value());
  qbd::SteadyState ss;
  ss.R = R;
  ss.pi0 = RowVector::Constant(1, pi0);
  ss.pi1 = pi0 * alpha * c.beta * Z;
  return ss;
}

// ---------------------------------------------------------------------------
// Dynamic rate: phases enumerate (rate r, fragment i), r = 1..N, i = 1..r,
// packed rate-block by rate-block, Delta = N(N+1)/2 phases total. T carries
// every transition that does not finish a packet (fragment progress, retries,
// and the down-shift after a first-fragment failure); S carries final-fragment
// successes together with the post-packet rate adaptation. The boundary keeps
// one state per rate so an empty buffer remembers the last rate used.
// ---------------------------------------------------------------------------

inline int dynamic_phase_count(int num_rates) {
  return num_rates * (num_rates + 1) / 2;
}

inline int rate_block_offset(int r) { return r * (r - 1) / 2; }

struct DynamicChain {
  int num_rates = 0;
  std::vector<double> p;  // success probability per rate, length N
  double down_prob = 0.0;
  double up_prob = 0.0;
  Matrix T;      // Delta x Delta
  Matrix S;      // Delta x Delta
  Matrix drain;  // Delta x N: S collapsed onto the destination rate memory
  Matrix start;  // N x Delta: row r starts the rate-r phase chain
};

inline DynamicChain make_dynamic_chain(const std::vector<double>& p, double d,
                                       double u) {
  const int N = static_cast<int>(p.size());
  if (N < 1) throw std::invalid_argument("make_dynamic_chain: empty TSP list");
  for (double pr : p)
    if (!(pr > 0.0 && pr <= 1.0))
      throw std::invalid_argument("make_dynamic_chain: TSP outside (0,1]");
  if (d < 0.0 || d > 1.0 || u < 0.0 || u > 1.0)
    throw std::invalid_argument(
        "make_dynamic_chain: adaptation probabilities outside [0,1]");

  const int delta = dynamic_phase_count(N);
  DynamicChain c;
  c.num_rates = N;
  c.p = p;
  c.down_prob = d;
  c.up_prob = u;
  c.T = Matrix::Zero(delta, delta);
  c.S = Matrix::Zero(delta, delta);
  c.drain = Matrix::Zero(delta, N);
  c.start = Matrix::Zero(N, delta);

  for (int r = 1; r <= N; ++r) {
    const double pr = p[r - 1];
    const double fail = 1.0 - pr;
    const int o = rate_block_offset(r);
    // First fragment: failure either persists or shifts one rate down; the
    // slowest rate has nowhere to shift, so all failure mass persists there.
    c.T(o, o) = (r < N) ? (1.0 - d) * fail : fail;
    if (r < N) c.T(o, rate_block_offset(r + 1)) = d * fail;
    // Fragments 2..r: plain retry, no adaptation mid-packet.
    for (int i = 2; i <= r; ++i) c.T(o + i - 1, o + i - 1) = fail;
    // Fragment advance within the packet.
    for (int i = 1; i < r; ++i) c.T(o + i - 1, o + i) = pr;
    // Last-fragment success: persist or explore the next faster rate. The
    // fastest rate persists with probability 1.
    const int last = o + r - 1;
    if (r == 1) {
      c.S(last, o) = pr;
    } else {
      c.S(last, o) = (1.0 - u) * pr;
      c.S(last, rate_block_offset(r - 1)) = u * pr;
    }
    c.start(r - 1, o) = 1.0;
  }
  // S only ever enters a block at its first phase, so the drain map is S
  // restricted to those columns.
  for (int r = 1; r <= N; ++r)
    c.drain.col(r - 1) = c.S.col(rate_block_offset(r));
  return c;
}

inline qbd::QbdSpec build_dynamic(const DynamicChain& c, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("build_dynamic: alpha outside (0,1)");
  const double ab = 1.0 - alpha;
  qbd::QbdSpec spec;
  spec.B = ab * Matrix::Identity(c.num_rates, c.num_rates);
  spec.C = alpha * c.start;
  spec.E = ab * c.drain;
  spec.A0 = alpha * c.T;
  spec.A1 = ab * c.T + alpha * c.S;
  spec.A2 = ab * c.S;
  return spec;
}

inline qbd::QbdSpec build_dynamic(const std::vector<double>& p, double alpha,
                                  double d, double u) {
  return build_dynamic(make_dynamic_chain(p, d, u), alpha);
}

// Restriction of the frozen chain (d = u = 0) to the rate-n block. With no
// adaptation the rate-n phases form a closed set, and the restriction is
// exactly the static rate-n chain; this is the frozen-adaptation route used
// to cross-check the two constructions against each other.
inline qbd::QbdSpec build_dynamic_pinned(const std::vector<double>& p, int n,
                                         double alpha) {
  const int N = static_cast<int>(p.size());
  if (n < 1 || n > N)
    throw std::invalid_argument("build_dynamic_pinned: rate index outside 1..N");
  const DynamicChain c = make_dynamic_chain(p, 0.0, 0.0);
  const double ab = 1.0 - alpha;
  const int o = rate_block_offset(n);
  qbd::QbdSpec spec;
  spec.B = Matrix::Constant(1, 1, ab);
  spec.C = alpha * c.start.block(n - 1, o, 1, n);
  spec.E = ab * c.drain.block(o, n - 1, n, 1);
  spec.A0 = alpha * c.T.block(o, o, n, n);
  spec.A1 = ab * c.T.block(o, o, n, n) + alpha * c.S.block(o, o, n, n);
  spec.A2 = ab * c.S.block(o, o, n, n);
  return spec;
}

// Null-space form of the dynamic steady state: pi1 spans the null space of
//   Q = [(1-alpha)(drain start + T + R S) + alpha S]^T - I
// and the boundary follows as pi0 = (1-alpha)/alpha pi1 drain.
inline qbd::SteadyState dynamic_steady_state_nullspace(const DynamicChain& c,
                                                       double alpha,
                                                       const Matrix& R) {
  const int delta = dynamic_phase_count(c.num_rates);
  const double ab = 1.0 - alpha;
  const Matrix Q =
      (ab * (c.drain * c.start + c.T + R * c.S) + alpha * c.S).transpose() -
      Matrix::Identity(delta, delta);

  Eigen::JacobiSVD<Matrix> svd(Q, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int null_dim = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) < 1e-10 * sv(0)) ++null_dim;
  if (null_dim != 1)
    throw std::runtime_error(
        "dynamic_steady_state_nullspace: null space dimension " +
        std::to_string(null_dim));
  Vector v = svd.matrixV().col(delta - 1);
  if (v.sum() < 0.0) v = -v;

  qbd::SteadyState ss;
  ss.R = R;
  ss.pi1 = v.transpose();
  ss.pi0 = (ab / alpha) * ss.pi1 * c.drain;
  const Matrix inv_ir =
      (Matrix::Identity(delta, delta) - R).partialPivLu().inverse();
  const double mass =
      ss.pi0.sum() + (ss.pi1 * inv_ir * Vector::Ones(delta)).value();
  ss.pi0 /= mass;
  ss.pi1 /= mass;
  return ss;
}

// ---------------------------------------------------------------------------
// Per-class latency tables.
// ---------------------------------------------------------------------------

struct ClassLatency {
  int class_index = 0;
  bool stable = false;
  double tx_latency = 0.0;  // saturated mean slots per packet, n/p for static
  double total_latency = std::numeric_limits<double>::infinity();
};

struct LatencyTable {
  std::vector<ClassLatency> classes;
  int unstable_count = 0;
  // Mean over stable classes only; unstable classes are reported through
  // the instability fraction instead of poisoning the average.
  double avg_stable = std::numeric_limits<double>::infinity();
  // Literal all-class average: infinite as soon as one class is unstable.
  double avg_all = std::numeric_limits<double>::infinity();

  double instability_fraction() const {
    return classes.empty()
               ? 0.0
               : static_cast<double>(unstable_count) / classes.size();
  }
};

inline void finish_table(LatencyTable& table) {
  double sum = 0.0;
  int stable = 0;
  for (const ClassLatency& c : table.classes) {
    if (c.stable) {
      sum += c.total_latency;
      ++stable;
    }
  }
  table.unstable_count = static_cast<int>(table.classes.size()) - stable;
  if (stable > 0) table.avg_stable = sum / stable;
  if (table.unstable_count == 0 && stable > 0) table.avg_all = sum / stable;
}

// Latency of the static rate n across all TSP classes of the grid. A class
// is stable iff p/n > alpha; unstable classes keep an infinite latency.
inline LatencyTable latency_static(const meta::TspGrid& grid,
                                   const LinkConfig& link, int n) {
  const double alpha = link.arrival_prob;
  LatencyTable table;
  table.classes.reserve(grid.num_classes);
  for (int m = 1; m <= grid.num_classes; ++m) {
    const double p = grid.rep(n, m);
    ClassLatency cl;
    cl.class_index = m;
    cl.tx_latency = n / p;
    cl.stable = p / n > alpha;
    if (cl.stable) {
      const qbd::QbdSpec spec = build_static(p, n, alpha);
      const qbd::SteadyState ss = qbd::solve_steady_state(spec);
      cl.total_latency = qbd::mean_latency(ss, alpha);
    }
    table.classes.push_back(cl);
  }
  finish_table(table);
  return table;
}

// Latency of the dynamic scheme across all TSP classes. Stability is the
// mean-drift test on the assembled blocks; the saturated per-packet service
// time is 1 / (Pi S e) with Pi the stationary law of the phase process, so
// the same stability threshold 1/alpha applies to the tx column.
inline LatencyTable latency_dynamic(const meta::TspGrid& grid,
                                    const LinkConfig& link, double d,
                                    double u) {
  const double alpha = link.arrival_prob;
  LatencyTable table;
  table.classes.reserve(grid.num_classes);
  for (int m = 1; m <= grid.num_classes; ++m) {
    const DynamicChain chain = make_dynamic_chain(grid.class_column(m), d, u);
    const qbd::QbdSpec spec = build_dynamic(chain, alpha);
    const qbd::RowVector phase_pi =
        qbd::stationary_distribution(chain.T + chain.S);
    ClassLatency cl;
    cl.class_index = m;
    cl.tx_latency = 1.0 / phase_pi.dot(chain.S.rowwise().sum());
    cl.stable = qbd::drift_stable(spec);
    if (cl.stable) {
      const qbd::SteadyState ss = qbd::solve_steady_state(spec);
      cl.total_latency = qbd::mean_latency(ss, alpha);
    }
    table.classes.push_back(cl);
  }
  finish_table(table);
  return table;
}

// Frozen-adaptation latency: the dynamic machinery pinned at rate n, solved
// through the generic pipeline.
inline LatencyTable latency_dynamic_pinned(const meta::TspGrid& grid,
                                           const LinkConfig& link, int n) {
  const double alpha = link.arrival_prob;
  LatencyTable table;
  table.classes.reserve(grid.num_classes);
  for (int m = 1; m <= grid.num_classes; ++m) {
    const double p = grid.rep(n, m);
    const qbd::QbdSpec spec =
        build_dynamic_pinned(grid.class_column(m), n, alpha);
    ClassLatency cl;
    cl.class_index = m;
    cl.tx_latency = n / p;
    cl.stable = p / n > alpha;
    if (cl.stable) {
      const qbd::SteadyState ss = qbd::solve_steady_state(spec);
      cl.total_latency = qbd::mean_latency(ss, alpha);
    }
    table.classes.push_back(cl);
  }
  finish_table(table);
  return table;
}

}  // namespace ratelat::chains
