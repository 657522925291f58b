#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ratelat::qbd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Discrete-time quasi-birth-death chain over buffer levels 0, 1, 2, ...
//
//       | B  C            |
//   P = | E  A1 A0        |
//       |    A2 A1 A0     |
//       |       .. .. ..  |
//
// Level 0 (empty buffer) has its own state space of `boundary_size`
// states; every level k >= 1 shares `phase_size` phases.
struct QbdSpec {
  Matrix B;   // boundary self-transitions, b x b
  Matrix C;   // boundary -> level 1, b x n
  Matrix E;   // level 1 -> boundary, n x b
  Matrix A0;  // level up, n x n
  Matrix A1;  // level hold, n x n
  Matrix A2;  // level down, n x n

  Eigen::Index boundary_size() const { return B.rows(); }
  Eigen::Index phase_size() const { return A1.rows(); }
};

struct SteadyState {
  RowVector pi0;  // boundary probabilities
  RowVector pi1;  // level-1 probabilities; pi_k = pi1 R^{k-1} for k >= 1
  Matrix R;       // minimal nonnegative rate matrix
};

inline constexpr double kRowSumTol = 1e-12;

// Checks block dimensions, entry nonnegativity and row-stochasticity of
// [B C], [E A1 A0] and [A2 A1 A0]. Throws naming the first offending row;
// a failure here means the chain builder is buggy.
inline void validate(const QbdSpec& spec) {
  const auto b = spec.boundary_size();
  const auto n = spec.phase_size();
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("QbdSpec: " + msg);
  };
  if (spec.B.cols() != b) fail("B must be square");
  if (spec.A1.cols() != n || spec.A0.rows() != n || spec.A0.cols() != n ||
      spec.A2.rows() != n || spec.A2.cols() != n)
    fail("A0, A1, A2 must be square and equally sized");
  if (spec.C.rows() != b || spec.C.cols() != n)
    fail("C must map boundary to level (" + std::to_string(b) + "x" +
         std::to_string(n) + ")");
  if (spec.E.rows() != n || spec.E.cols() != b)
    fail("E must map level to boundary (" + std::to_string(n) + "x" +
         std::to_string(b) + ")");

  for (const Matrix* m : {&spec.B, &spec.C, &spec.E, &spec.A0, &spec.A1, &spec.A2})
    if ((m->array() < 0.0).any()) fail("negative entry in a block");

  for (Eigen::Index i = 0; i < b; ++i) {
    const double s = spec.B.row(i).sum() + spec.C.row(i).sum();
    if (std::fabs(s - 1.0) > kRowSumTol)
      fail("boundary row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s1 =
        spec.E.row(i).sum() + spec.A1.row(i).sum() + spec.A0.row(i).sum();
    if (std::fabs(s1 - 1.0) > kRowSumTol)
      fail("level-1 row " + std::to_string(i) + " sums to " + std::to_string(s1));
    const double s2 =
        spec.A2.row(i).sum() + spec.A1.row(i).sum() + spec.A0.row(i).sum();
    if (std::fabs(s2 - 1.0) > kRowSumTol)
      fail("repeating row " + std::to_string(i) + " sums to " + std::to_string(s2));
  }
}

// Stationary distribution of a stochastic matrix A, via the bordered system
// x = (A^T - I + e e^T)^{-1} e. The bordered matrix is singular exactly when
// the stationary law is not unique, so full-pivot LU doubles as the
// reducibility guard.
inline RowVector stationary_distribution(const Matrix& A) {
  const auto n = A.rows();
  const Matrix K = A.transpose() - Matrix::Identity(n, n) + Matrix::Ones(n, n);
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "stationary_distribution: phase process has no unique stationary law "
        "(reducible chain?)");
  const Vector x = lu.solve(Vector::Ones(n));
  if (!x.allFinite() ||
      ((x.transpose() * A) - x.transpose()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::fabs(x.sum() - 1.0) > 1e-9)
    throw std::runtime_error(
        "stationary_distribution: stationary solve failed its residual check");
  return x.transpose();
}

// Mean-drift stability test: with Pi the stationary law of A0 + A1 + A2,
// the queue is stable iff the level-down flow Pi A2 e exceeds the level-up
// flow Pi A0 e.
inline bool drift_stable(const QbdSpec& spec) {
  const RowVector pi = stationary_distribution(spec.A0 + spec.A1 + spec.A2);
  return pi.dot(spec.A2.rowwise().sum()) > pi.dot(spec.A0.rowwise().sum());
}

struct RateMatrixOptions {
  double tol = 1e-13;     // sup-norm change between successive iterates
  long max_iter = 100000;
};

// Minimal nonnegative solution of R = A0 + R A1 + R^2 A2 by fixed-point
// iteration from R = 0. Monotone convergence; the iteration cap guards
// near-critical loads, where it reports the final residual instead of
// spinning forever.
inline Matrix solve_rate_matrix(const QbdSpec& spec,
                                const RateMatrixOptions& opt = {}) {
  const auto n = spec.phase_size();
  Matrix R = Matrix::Zero(n, n);
  double diff = 0.0;
  for (long it = 0; it < opt.max_iter; ++it) {
    Matrix next = spec.A0 + R * spec.A1 + R * R * spec.A2;
    diff = (next - R).cwiseAbs().maxCoeff();
    R.swap(next);
    if (diff < opt.tol) return R;
  }
  throw std::runtime_error(
      "solve_rate_matrix: no convergence after " +
      std::to_string(opt.max_iter) +
      " iterations (near-critical load?), last step " + std::to_string(diff));
}

inline double spectral_radius(const Matrix& M) {
  return Eigen::EigenSolver<Matrix>(M, /*computeEigenvectors=*/false)
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

// Boundary + level-1 solution of pi P = pi with the geometric tail
// pi_k = pi1 R^{k-1}, normalized so pi0 e + pi1 (I-R)^{-1} e = 1.
// The two balance blocks
//   pi0 (B - I) + pi1 E = 0
//   pi0 C + pi1 (A1 + R A2 - I) = 0
// make [pi0 pi1] a left null vector of one square matrix; the null space is
// extracted by SVD with a relative singular-value threshold, and must be
// one-dimensional for a well-formed chain.
inline SteadyState solve_steady_state(const QbdSpec& spec, const Matrix& R) {
  const auto b = spec.boundary_size();
  const auto n = spec.phase_size();
  const double rho = spectral_radius(R);
  if (!(rho < 1.0))
    throw std::runtime_error("solve_steady_state: spectral radius " +
                             std::to_string(rho) + " is not below 1");

  Matrix K(b + n, b + n);
  K.topLeftCorner(b, b) = spec.B - Matrix::Identity(b, b);
  K.topRightCorner(b, n) = spec.C;
  K.bottomLeftCorner(n, b) = spec.E;
  K.bottomRightCorner(n, n) =
      spec.A1 + R * spec.A2 - Matrix::Identity(n, n);

  Eigen::JacobiSVD<Matrix> svd(K.transpose(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double thresh = 1e-10 * sv(0);
  int null_dim = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) < thresh) ++null_dim;
  if (null_dim != 1)
    throw std::runtime_error(
        "solve_steady_state: balance system has null space of dimension " +
        std::to_string(null_dim) + ", chain is malformed");

  Vector v = svd.matrixV().col(b + n - 1);
  if (v.sum() < 0.0) v = -v;
  if (v.minCoeff() < -1e-9)
    throw std::runtime_error(
        "solve_steady_state: null vector has mixed signs");
  v = v.cwiseMax(0.0);

  SteadyState ss;
  ss.R = R;
  ss.pi0 = v.head(b).transpose();
  ss.pi1 = v.tail(n).transpose();
  const Matrix inv_ir =
      (Matrix::Identity(n, n) - R).partialPivLu().inverse();
  const double mass =
      ss.pi0.sum() + (ss.pi1 * inv_ir * Vector::Ones(n)).value();
  ss.pi0 /= mass;
  ss.pi1 /= mass;
  return ss;
}

inline SteadyState solve_steady_state(const QbdSpec& spec) {
  return solve_steady_state(spec, solve_rate_matrix(spec));
}

// Little's law: mean sojourn = mean level / arrival rate, with mean level
// pi1 (I-R)^{-2} e.
inline double mean_latency(const SteadyState& ss, double arrival_prob) {
  const auto n = ss.R.rows();
  const Matrix inv_ir =
      (Matrix::Identity(n, n) - ss.R).partialPivLu().inverse();
  const double mean_level =
      (ss.pi1 * inv_ir * inv_ir * Vector::Ones(n)).value();
  return mean_level / arrival_prob;
}

}  // namespace ratelat::qbd
