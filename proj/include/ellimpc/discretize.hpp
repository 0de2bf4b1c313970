#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Matrix exponential by scaling-and-squaring with a Taylor series on the
/// scaled matrix. The inputs here are small and well scaled, so plain Taylor
/// after halving to norm <= 0.5 reaches machine accuracy.
inline Matrix matrix_exp(const Matrix& m) {
  assert(m.rows() == m.cols());
  const std::size_t n = m.rows();

  double norm = 0.0;  // max row sum
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(m(i, j));
    norm = std::max(norm, s);
  }
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }

  Matrix a = m * scale;
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 60; ++k) {
    term = term * a;
    term *= 1.0 / static_cast<double>(k);
    result += term;
    if (max_abs(term) <= 1e-20 * std::max(1.0, max_abs(result))) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

struct DiscreteModel {
  Matrix A;
  Matrix B;
};

/// Zero-order-hold discretization of x' = A_c x + B_c u at sample time Ts.
/// One exponential of the augmented block matrix [[A_c, B_c], [0, 0]] yields
/// A = exp(A_c Ts) in the top-left block and the input integral times B_c in
/// the top-right block.
inline DiscreteModel zoh_discretize(const Matrix& a_c, const Matrix& b_c, double ts) {
  assert(ts > 0.0);
  const std::size_t n = a_c.rows();
  const std::size_t m = b_c.cols();
  assert(a_c.cols() == n && b_c.rows() == n);

  Matrix aug(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = a_c(i, j) * ts;
    for (std::size_t j = 0; j < m; ++j) aug(i, n + j) = b_c(i, j) * ts;
  }
  const Matrix e = matrix_exp(aug);

  DiscreteModel d{Matrix(n, n), Matrix(n, m)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d.A(i, j) = e(i, j);
    for (std::size_t j = 0; j < m; ++j) d.B(i, j) = e(i, n + j);
  }
  return d;
}

}  // namespace ellimpc
