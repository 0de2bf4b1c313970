#pragma once

// Independent reference computations the tests check the library against.
// Everything here deliberately takes the slow, direct route.

#include <cmath>
#include <stdexcept>

#include "ellimpc/discretize.hpp"
#include "ellimpc/ellipsoid.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/solver.hpp"

namespace testutil {

using ellimpc::Matrix;
using ellimpc::Vector;
using ellimpc::operator*;
using ellimpc::operator+;
using ellimpc::operator-;

/// Dense LU solve with partial pivoting.
inline Vector lu_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("lu_solve: shape");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(pivot, col))) pivot = i;
    if (std::abs(a(pivot, col)) < 1e-300) throw std::runtime_error("lu_solve: singular");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a(i, col) / a(col, col);
      a(i, col) = 0.0;
      for (std::size_t j = col + 1; j < n; ++j) a(i, j) -= f * a(col, j);
      b[i] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= a(ii, j) * x[j];
    x[ii] = acc / a(ii, ii);
  }
  return x;
}

/// Truncated-series zero-order hold:
///   A = sum_k (A_c Ts)^k / k!,  B = (sum_k A_c^k Ts^{k+1} / (k+1)!) B_c.
inline ellimpc::DiscreteModel taylor_zoh(const Matrix& a_c, const Matrix& b_c, double ts,
                                         int terms = 30) {
  const std::size_t n = a_c.rows();
  Matrix a_sum = Matrix::identity(n);
  Matrix b_int = Matrix::identity(n) * ts;  // running integral coefficient
  Matrix power = Matrix::identity(n);       // (A_c Ts)^k / k!
  for (int k = 1; k <= terms; ++k) {
    power = power * a_c;
    power *= ts / static_cast<double>(k);
    a_sum += power;
    // integral term k: (A_c)^k Ts^{k+1} / (k+1)! = power * Ts / (k+1)
    b_int += power * (ts / static_cast<double>(k + 1));
  }
  return {a_sum, b_int * b_c};
}

/// Classic normalized power iteration; returns the growth-rate estimate of
/// the dominant eigenvalue magnitude.
inline double power_iteration_radius(const Matrix& a, int iters = 4000) {
  const std::size_t n = a.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(static_cast<double>(i) + 1.0);
  double log_growth = 0.0;
  int counted = 0;
  for (int k = 0; k < iters; ++k) {
    x = a * x;
    const double norm = ellimpc::inf_norm(x);
    if (norm == 0.0) return 0.0;
    for (double& v : x) v /= norm;
    if (k >= iters / 2) {  // discard the transient
      log_growth += std::log(norm);
      ++counted;
    }
  }
  return std::exp(log_growth / counted);
}

/// Projection onto the ellipsoid in its own metric through the scalar dual:
/// maximize the concave dual function by bisection on its derivative
///   d/dy [ y/(1+2y) * q - r^2 y ] = q/(1+2y)^2 - r^2,
/// then recover v = c + (a - c)/(1 + 2 y*).
inline Vector ellipsoid_projection_dual_oracle(const Vector& a, const ellimpc::Ellipsoid& ell) {
  const std::size_t n = ell.dim();
  Vector shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = a[i] - ell.c[i];
  const double q = ellimpc::quadratic_form(ell.P, shifted);
  const double rr = ell.r * ell.r;
  auto dual_slope = [&](double y) { return q / ((1.0 + 2.0 * y) * (1.0 + 2.0 * y)) - rr; };

  double y_star = 0.0;
  if (dual_slope(0.0) > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (dual_slope(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dual_slope(mid) > 0.0 ? lo : hi) = mid;
    }
    y_star = 0.5 * (lo + hi);
  }
  Vector v(n);
  const double shrink = 1.0 / (1.0 + 2.0 * y_star);
  for (std::size_t i = 0; i < n; ++i) v[i] = ell.c[i] + shrink * shifted[i];
  return v;
}

/// Dense consensus-constraint blocks (identity stages, P^{1/2} terminal).
struct DenseCD {
  Matrix C, D;
};

inline DenseCD build_dense_cd(const ellimpc::MPCProblem& p) {
  const ellimpc::StackLayout lay{p.state_dim(), p.input_dim(), p.horizon};
  Matrix c(lay.dim(), lay.dim());
  for (std::size_t i = 0; i < lay.head_dim(); ++i) c(i, i) = 1.0;
  const ellimpc::SymmetricSqrt root = ellimpc::symmetric_sqrt(p.terminal.P);
  for (std::size_t i = 0; i < lay.n; ++i)
    for (std::size_t j = 0; j < lay.n; ++j)
      c(lay.terminal_offset() + i, lay.terminal_offset() + j) = root.half(i, j);
  return {c, (-1.0) * c};
}

}  // namespace testutil
