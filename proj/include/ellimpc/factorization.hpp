#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "ellimpc/errors.hpp"
#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Upper-triangular Cholesky factor U with U' U = S.
///
/// S must be symmetric positive definite; a pivot at or below `pivot_floor`
/// raises NotPositiveDefinite.
inline Matrix cholesky(const Matrix& s, double pivot_floor = 1e-14) {
  assert(s.rows() == s.cols());
  const std::size_t n = s.rows();
  Matrix u(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = s(i, i);
    for (std::size_t k = 0; k < i; ++k) d -= u(k, i) * u(k, i);
    if (d <= pivot_floor) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(d) +
                                " at index " + std::to_string(i));
    }
    u(i, i) = std::sqrt(d);
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = s(i, j);
      for (std::size_t k = 0; k < i; ++k) v -= u(k, i) * u(k, j);
      u(i, j) = v / u(i, i);
    }
  }
  return u;
}

/// Backward substitution: solve U x = b for upper-triangular U.
inline Vector solve_upper(const Matrix& u, std::span<const double> b) {
  const std::size_t n = u.rows();
  assert(u.cols() == n && b.size() == n);
  Vector x(b.begin(), b.end());
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= u(ii, j) * x[j];
    x[ii] /= u(ii, ii);
  }
  return x;
}

/// Forward substitution: solve U' x = b for upper-triangular U.
inline Vector solve_upper_transposed(const Matrix& u, std::span<const double> b) {
  const std::size_t n = u.rows();
  assert(u.cols() == n && b.size() == n);
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= u(k, i) * x[k];
    x[i] /= u(i, i);
  }
  return x;
}

/// Solve S x = b for symmetric positive definite S through its Cholesky factor.
inline Vector solve_spd(const Matrix& u_factor, std::span<const double> b) {
  return solve_upper(u_factor, solve_upper_transposed(u_factor, b));
}

/// Inverse of a symmetric positive definite matrix, column by column.
inline Matrix inverse_spd(const Matrix& s, double pivot_floor = 1e-14) {
  const std::size_t n = s.rows();
  const Matrix u = cholesky(s, pivot_floor);
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = solve_spd(u, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  // exact symmetry keeps downstream quadratic forms clean
  return symmetrized(inv);
}

/// Eigendecomposition of a symmetric matrix: S = V diag(values) V'.
struct SymmetricEigen {
  Matrix vectors;  // columns are eigenvectors
  Vector values;
};

/// Cyclic Jacobi sweeps. Adequate for the dimensions this library targets
/// (n below ~50); converges quadratically once off-diagonals are small.
inline SymmetricEigen eigen_symmetric(const Matrix& s, int max_sweeps = 64) {
  assert(s.rows() == s.cols());
  const std::size_t n = s.rows();
  Matrix a = symmetrized(s);
  Matrix v = Matrix::identity(n);

  auto off_norm = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  const double scale = max_abs(a);
  const double tol = 1e-15 * (scale > 0 ? scale : 1.0) * static_cast<double>(n);
  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigen out{std::move(v), Vector(n)};
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  return out;
}

inline double min_eigenvalue(const Matrix& s) {
  const SymmetricEigen e = eigen_symmetric(s);
  double m = e.values[0];
  for (double x : e.values) m = std::min(m, x);
  return m;
}

/// P^{1/2} and P^{-1/2} for symmetric positive definite P, with
/// P^{1/2} P^{1/2} = P and P^{-1/2} its inverse.
struct SymmetricSqrt {
  Matrix half;
  Matrix inv_half;
};

inline SymmetricSqrt symmetric_sqrt(const Matrix& p, double eigen_floor = 1e-12) {
  const std::size_t n = p.rows();
  assert(p.cols() == n);
  const SymmetricEigen e = eigen_symmetric(p);
  for (double lam : e.values) {
    if (lam <= eigen_floor) {
      throw NotPositiveDefinite("symmetric_sqrt: eigenvalue " + std::to_string(lam));
    }
  }
  Matrix half(n, n), inv_half(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double h = 0.0, g = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double w = e.vectors(i, k) * e.vectors(j, k);
        const double sq = std::sqrt(e.values[k]);
        h += w * sq;
        g += w / sq;
      }
      half(i, j) = h;
      inv_half(i, j) = g;
    }
  }
  return {symmetrized(half), symmetrized(inv_half)};
}

}  // namespace ellimpc
