#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// The set { x : (x - c)' P (x - c) <= r^2 } with P symmetric positive
/// definite and r > 0.
struct Ellipsoid {
  Matrix P;
  Vector c;
  double r = 1.0;

  std::size_t dim() const noexcept { return c.size(); }

  /// (x - c)' P (x - c)
  double quadratic(std::span<const double> x) const {
    Vector shifted(x.begin(), x.end());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= c[i];
    return quadratic_form(P, shifted);
  }

  bool contains(std::span<const double> x, double tol = 0.0) const {
    return quadratic(x) <= r * r * (1.0 + tol);
  }
};

/// Componentwise clip of w onto [lo, hi]. This is the exact minimizer of a
/// separable quadratic over the box.
inline Vector project_box(std::span<const double> w, std::span<const double> lo,
                          std::span<const double> hi) {
  assert(w.size() == lo.size() && w.size() == hi.size());
  Vector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out[i] = std::max(std::min(w[i], hi[i]), lo[i]);
  return out;
}

/// Minimizer of 0.5 * ||v - a||_P^2 over the ellipsoid. Because the
/// projection metric shares the shape matrix P, the solution is a radial
/// shrink toward the center whenever a lies outside:
///   v = c + r (a - c) / sqrt((a - c)' P (a - c))
/// and v = a otherwise.
inline Vector project_ellipsoid_weighted(std::span<const double> a, const Ellipsoid& ell) {
  const std::size_t n = ell.dim();
  assert(a.size() == n);
  Vector shifted(a.begin(), a.end());
  for (std::size_t i = 0; i < n; ++i) shifted[i] -= ell.c[i];
  const double quad = quadratic_form(ell.P, shifted);
  const double rr = ell.r * ell.r;
  if (quad <= rr) return Vector(a.begin(), a.end());
  const double scale = ell.r / std::sqrt(quad);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ell.c[i] + scale * shifted[i];
  return out;
}

}  // namespace ellimpc
