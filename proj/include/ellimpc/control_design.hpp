#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ellimpc/errors.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Spectral radius estimate through normalized repeated squaring:
/// rho(A) = lim ||A^(2^j)||^(1/2^j). Forty squarings drive the power to 2^40,
/// which makes the norm-equivalence bias negligible for any matrix this
/// library meets.
inline double spectral_radius_estimate(const Matrix& a, int squarings = 40) {
  assert(a.rows() == a.cols());
  const double f0 = max_abs(a);
  if (f0 == 0.0) return 0.0;
  Matrix b = a * (1.0 / f0);
  double log_scale = std::log(f0);  // A^(2^j) = b * exp(log_scale), ||b|| = 1
  for (int j = 0; j < squarings; ++j) {
    b = b * b;
    const double f = max_abs(b);
    if (f == 0.0) return 0.0;  // nilpotent
    b *= 1.0 / f;
    log_scale = 2.0 * log_scale + std::log(f);
  }
  return std::exp(log_scale / std::exp2(static_cast<double>(squarings)));
}

namespace detail {
/// A' M A for square A and symmetric M.
inline Matrix congruence(const Matrix& a, const Matrix& m) {
  return symmetrized(a.transposed() * (m * a));
}
}  // namespace detail

/// Solve A' T A - T = -M for Schur-stable A and symmetric positive
/// semidefinite M, by doubling the accumulated series sum_i (A')^i M A^i:
///   T <- T + A' T A,  A <- A * A
/// which converges geometrically. The result satisfies the residual to
/// 1e-9 * ||M|| or better.
inline Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& m,
                                      double stop_tol = 1e-14) {
  assert(a.rows() == a.cols() && m.rows() == m.cols() && a.rows() == m.rows());
  const double rho = spectral_radius_estimate(a);
  if (!(rho < 1.0 - 1e-6)) {
    throw NotStable("solve_discrete_lyapunov: spectral radius estimate " +
                    std::to_string(rho));
  }
  Matrix t = symmetrized(m);
  Matrix ak = a;
  const double tol = stop_tol * std::max(1.0, max_abs(m));
  for (int iter = 0; iter < 200; ++iter) {
    const Matrix increment = detail::congruence(ak, t);
    t += increment;
    if (max_abs(increment) < tol) return symmetrized(t);
    ak = ak * ak;
  }
  throw NoConvergence("solve_discrete_lyapunov: doubling did not contract");
}

struct LqrOptions {
  double tolerance = 1e-12;
  int max_iterations = 10000;
};

/// Infinite-horizon discrete LQR gain K with u = K x stabilizing (A, B),
/// from fixed-point iteration on the Riccati recursion started at Q.
/// Iterates until the value matrix settles below `tolerance` in max-norm.
inline Matrix riccati_lqr(const Matrix& a, const Matrix& b, const Matrix& q,
                          const Matrix& r, const LqrOptions& opts = {}) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  assert(a.cols() == n && b.rows() == n && q.rows() == n && r.rows() == m);

  Matrix p = symmetrized(q);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Matrix bt_p = b.transposed() * p;       // m x n
    const Matrix s = symmetrized(r + bt_p * b);   // R + B'PB
    const Matrix s_chol = cholesky(s);
    const Matrix bt_p_a = bt_p * a;               // B'PA

    // X = (R + B'PB)^{-1} B'PA, column by column
    Matrix x(m, n);
    Vector col(m);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) col[i] = bt_p_a(i, j);
      const Vector sol = solve_spd(s_chol, col);
      for (std::size_t i = 0; i < m; ++i) x(i, j) = sol[i];
    }

    Matrix p_next = symmetrized(q + detail::congruence(a, p) - bt_p_a.transposed() * x);
    const double step = max_abs(p_next - p);
    p = std::move(p_next);
    if (step < opts.tolerance) {
      const Matrix bt_p2 = b.transposed() * p;
      const Matrix s2 = symmetrized(r + bt_p2 * b);
      const Matrix s2_chol = cholesky(s2);
      const Matrix bt_p_a2 = bt_p2 * a;
      Matrix k(m, n);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) col[i] = bt_p_a2(i, j);
        const Vector sol = solve_spd(s2_chol, col);
        for (std::size_t i = 0; i < m; ++i) k(i, j) = -sol[i];
      }
      return k;
    }
  }
  throw NoConvergence("riccati_lqr: no fixed point after " +
                      std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace ellimpc
