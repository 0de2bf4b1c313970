#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ellimpc/control_design.hpp"
#include "ellimpc/ellipsoid.hpp"
#include "ellimpc/errors.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Admissible region { x : C x <= c } x { u : D u <= d } used when sizing the
/// terminal set.
struct PolytopeConstraints {
  Matrix C;
  Vector c;
  Matrix D;
  Vector d;
};

/// Terminal gain, terminal cost, invariant ellipsoid and the contraction
/// factor that certifies it.
struct TerminalIngredients {
  Matrix K;  // u = K (x - x_r) + u_r
  Matrix T;
  Ellipsoid set;
  double lambda = 1.0;
};

/// Double-sided boxes as polytope rows. Rows with an infinite bound are
/// dropped; they cannot constrain the set.
inline PolytopeConstraints box_polytope(const Vector& x_lo, const Vector& x_hi,
                                        const Vector& u_lo, const Vector& u_hi) {
  struct Row {
    std::size_t index;
    double sign;  // sign * w_index <= rhs
    double rhs;
  };
  auto collect = [](const Vector& lo, const Vector& hi) {
    std::vector<Row> rows;
    for (std::size_t j = 0; j < lo.size(); ++j) {
      if (std::isfinite(hi[j])) rows.push_back({j, 1.0, hi[j]});
      if (std::isfinite(lo[j])) rows.push_back({j, -1.0, -lo[j]});
    }
    return rows;
  };
  const std::vector<Row> xrows = collect(x_lo, x_hi);
  const std::vector<Row> urows = collect(u_lo, u_hi);

  PolytopeConstraints pc{Matrix(xrows.size(), x_lo.size()), Vector(xrows.size()),
                         Matrix(urows.size(), u_lo.size()), Vector(urows.size())};
  for (std::size_t i = 0; i < xrows.size(); ++i) {
    pc.C(i, xrows[i].index) = xrows[i].sign;
    pc.c[i] = xrows[i].rhs;
  }
  for (std::size_t i = 0; i < urows.size(); ++i) {
    pc.D(i, urows[i].index) = urows[i].sign;
    pc.d[i] = urows[i].rhs;
  }
  return pc;
}

/// Terminal cost from the closed-loop Lyapunov equation
///   (A + B K)' T (A + B K) - T = -(Q + K' R K).
inline Matrix terminal_cost(const Matrix& a, const Matrix& b, const Matrix& k,
                            const Matrix& q, const Matrix& r) {
  const Matrix a_cl = a + b * k;
  const Matrix rhs = symmetrized(q + k.transposed() * (r * k));
  return solve_discrete_lyapunov(a_cl, rhs);
}

/// Largest radius for which the ellipsoid { (x-x_r)' P (x-x_r) <= r^2 } and
/// the gain's inputs stay inside the admissible region. Each row contributes
/// the support-function bound
///   max over the set of  row * (x - x_r)  =  r * sqrt(row P^{-1} row'),
/// so the radius is the smallest ratio of shifted bound to row seminorm.
/// Zero rows are skipped (they cannot bind); a nonpositive shifted bound
/// means the reference touches the region boundary and no radius exists.
inline double max_admissible_radius(const Matrix& p, const Matrix& k,
                                    const PolytopeConstraints& pc, const Vector& x_r,
                                    const Vector& u_r) {
  const std::size_t n = p.rows();
  const Matrix p_chol = cholesky(p);
  bool any_row = false;
  double r_star = std::numeric_limits<double>::infinity();

  auto consider = [&](std::span<const double> row, double shifted_bound,
                      const std::string& what, std::size_t idx) {
    double row_norm2 = 0.0;
    for (double v : row) row_norm2 += v * v;
    if (row_norm2 == 0.0) return;  // unbounded direction, irrelevant
    if (!(shifted_bound > 0.0)) {
      throw DegenerateConstraint("max_admissible_radius: reference on the boundary of " +
                                 what + " row " + std::to_string(idx));
    }
    const Vector pinv_row = solve_spd(p_chol, row);
    const double seminorm = std::sqrt(dot(row, pinv_row));
    any_row = true;
    r_star = std::min(r_star, shifted_bound / seminorm);
  };

  for (std::size_t i = 0; i < pc.C.rows(); ++i) {
    const double shifted = pc.c[i] - dot(pc.C.row(i), x_r);
    consider(pc.C.row(i), shifted, "state", i);
  }
  Vector dk_row(n);
  for (std::size_t i = 0; i < pc.D.rows(); ++i) {
    // input row mapped into state space through the terminal gain
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k.rows(); ++l) acc += pc.D(i, l) * k(l, j);
      dk_row[j] = acc;
    }
    const double shifted = pc.d[i] - dot(pc.D.row(i), u_r);
    consider(dk_row, shifted, "input", i);
  }

  if (!any_row)
    throw DegenerateConstraint("max_admissible_radius: no nonzero constraint rows");
  return r_star;
}

struct InvarianceCheck {
  bool holds = false;
  double margin = 0.0;  // smallest eigenvalue of lambda P - A_K' P A_K
};

/// One-step invariance of the ellipsoid under the closed loop, certified by
/// lambda P - A_K' P A_K being positive semidefinite for some lambda <= 1.
/// The radius cancels from the condition; it is kept in the signature since
/// the certified set is E(P, x_r, r).
inline InvarianceCheck check_invariance(const Matrix& p, const Matrix& a, const Matrix& b,
                                        const Matrix& k, double lambda,
                                        double /*r*/ = 1.0) {
  const Matrix a_cl = a + b * k;
  const Matrix lhs = symmetrized(lambda * p - a_cl.transposed() * (p * a_cl));
  InvarianceCheck out;
  out.margin = min_eigenvalue(lhs);
  out.holds = lambda >= 0.0 && lambda <= 1.0 && out.margin >= -1e-10 * max_abs(p);
  return out;
}

/// Contraction factors to try, smallest first. The grid refines toward one:
/// when the shape matrix is the closed-loop Lyapunov cost, the certifiable
/// contraction is 1 - min eig(T^{-1/2} (Q + K'RK) T^{-1/2}), which sits very
/// close to one whenever the terminal cost dominates the stage cost.
inline Vector default_lambda_grid() {
  Vector grid;
  for (int i = 50; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  for (int i = 991; i <= 999; ++i) grid.push_back(static_cast<double>(i) / 1000.0);
  grid.push_back(0.9995);
  grid.push_back(0.9999);
  grid.push_back(1.0);
  return grid;
}

/// Fixed-shape terminal set construction: the gain comes from the
/// infinite-horizon regulator, the shape matrix is pinned to the terminal
/// cost, and only the radius is optimized. The smallest contraction factor
/// in the grid that certifies invariance is reported with the set.
inline TerminalIngredients build_terminal_set(const Matrix& a, const Matrix& b,
                                              const Matrix& q, const Matrix& r,
                                              const PolytopeConstraints& pc,
                                              const Vector& x_r, const Vector& u_r,
                                              const Vector& lambda_grid = default_lambda_grid()) {
  TerminalIngredients ti;
  ti.K = riccati_lqr(a, b, q, r);
  ti.T = terminal_cost(a, b, ti.K, q, r);
  ti.set.P = ti.T;
  ti.set.c = x_r;
  ti.set.r = max_admissible_radius(ti.set.P, ti.K, pc, x_r, u_r);

  for (double lambda : lambda_grid) {
    const InvarianceCheck chk = check_invariance(ti.set.P, a, b, ti.K, lambda, ti.set.r);
    if (chk.holds) {
      ti.lambda = lambda;
      return ti;
    }
  }
  throw NoInvariantSet("build_terminal_set: no contraction factor in the grid certifies invariance");
}

}  // namespace ellimpc
