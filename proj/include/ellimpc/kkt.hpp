#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ellimpc/block_tridiag.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/solver.hpp"

namespace ellimpc {

/// Independent first-order optimality certificate for a returned solution
/// triple. Every quantity is recomputed from the problem data alone; nothing
/// is taken from the solver's internal path.
struct KktResiduals {
  double dynamics = 0.0;            // ||G z - b||_inf
  double box_violation = 0.0;       // stage blocks of v outside their box
  double terminal_violation = 0.0;  // relative quadratic excess of v_f
  double split_gap = 0.0;           // scaled mismatch between z and v
  double stationarity = 0.0;        // Lagrangian gradient, minimized over the
                                    // equality multiplier
  double complementarity = 0.0;     // multiplier-times-slack products
};

/// Certification thresholds. Feasibility-type measures and complementarity
/// sit at 10x the exit tolerance. The stationarity bound carries the problem
/// scale: the exit residuals control the Lagrangian gradient only through
/// rho * C'C, whose largest block is rho * P, so the reachable accuracy is
/// proportional to rho * max(1, ||P||) * (2 eps_p + eps_d).
struct KktThresholds {
  double feasibility = 0.0;
  double complementarity = 0.0;
  double stationarity = 0.0;
};

inline KktThresholds kkt_thresholds(double eps_p, double eps_d, double rho,
                                    const Matrix& terminal_shape) {
  const double eps = std::max(eps_p, eps_d);
  KktThresholds t;
  t.feasibility = 10.0 * eps;
  t.complementarity = 10.0 * eps;
  t.stationarity = 10.0 * rho * std::max(1.0, max_abs(terminal_shape)) *
                   (2.0 * eps_p + eps_d);
  return t;
}

inline KktResiduals kkt_residuals(const MPCProblem& p, const SolverResult& result,
                                  std::span<const double> x_t) {
  const std::size_t n = p.state_dim();
  const std::size_t m = p.input_dim();
  const StackLayout lay{n, m, p.horizon};
  const std::size_t head = lay.head_dim();
  const Vector& z = result.z;
  const Vector& v = result.v;
  const Vector& lambda = result.lambda;

  KktResiduals r;

  // dynamics feasibility of z
  Vector gz(p.horizon * n, 0.0);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    std::span<const double> u(z.data() + lay.u_offset(i), m);
    const Vector bu = p.B * u;
    std::span<const double> x_next(z.data() + lay.x_offset(i + 1), n);
    for (std::size_t k = 0; k < n; ++k) gz[i * n + k] = bu[k] - x_next[k];
    std::span<const double> x_cur = i == 0 ? x_t : std::span<const double>(
                                                       z.data() + lay.x_offset(i), n);
    const Vector ax = p.A * x_cur;
    for (std::size_t k = 0; k < n; ++k) gz[i * n + k] += ax[k];
  }
  r.dynamics = inf_norm(gz);

  // box feasibility and complementarity of the stage blocks
  const StackedBounds sb = stacked_bounds(p);
  for (std::size_t i = 0; i < head; ++i) {
    r.box_violation = std::max({r.box_violation, sb.lo[i] - v[i], v[i] - sb.hi[i]});
    if (lambda[i] > 0.0)
      r.complementarity = std::max(r.complementarity, lambda[i] * (sb.hi[i] - v[i]));
    else if (lambda[i] < 0.0)
      r.complementarity = std::max(r.complementarity, -lambda[i] * (v[i] - sb.lo[i]));
  }
  r.box_violation = std::max(r.box_violation, 0.0);

  // terminal feasibility and complementarity
  std::span<const double> v_f(v.data() + head, n);
  const double quad = p.terminal.quadratic(v_f);
  const double rr = p.terminal.r * p.terminal.r;
  r.terminal_violation = std::max(0.0, (quad - rr) / rr);
  std::span<const double> lam_f(lambda.data() + head, n);
  if (quad < rr)
    r.complementarity = std::max(r.complementarity, inf_norm(lam_f) * (rr - quad) / rr);

  // scaled split gap, the same metric the exit condition uses
  const SymmetricSqrt root = symmetric_sqrt(p.terminal.P);
  for (std::size_t i = 0; i < head; ++i)
    r.split_gap = std::max(r.split_gap, std::abs(z[i] - v[i]));
  Vector diff(n);
  for (std::size_t k = 0; k < n; ++k) diff[k] = z[head + k] - v[head + k];
  r.split_gap = std::max(r.split_gap, inf_norm(root.half * diff));

  // stationarity: s = H z + q + C' lambda, minimized over the equality
  // multiplier through the normal equations of G G'
  Vector s = build_cost_gradient(p);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    std::span<const double> u(z.data() + lay.u_offset(i), m);
    const Vector ru = p.R * u;
    for (std::size_t k = 0; k < m; ++k) s[lay.u_offset(i) + k] += ru[k] + lambda[lay.u_offset(i) + k];
    if (i + 1 < p.horizon) {
      std::span<const double> x(z.data() + lay.x_offset(i + 1), n);
      const Vector qx = p.Q * x;
      for (std::size_t k = 0; k < n; ++k)
        s[lay.x_offset(i + 1) + k] += qx[k] + lambda[lay.x_offset(i + 1) + k];
    }
  }
  {
    std::span<const double> x_term(z.data() + lay.terminal_offset(), n);
    const Vector tx = p.T * x_term;
    const Vector cl = root.half * lam_f;
    for (std::size_t k = 0; k < n; ++k) s[lay.terminal_offset() + k] += tx[k] + cl[k];
  }

  // G s and the block-tridiagonal normal matrix G G'
  const Matrix bbt = symmetrized(p.B * p.B.transposed());
  const Matrix aat = symmetrized(p.A * p.A.transposed());
  std::vector<Matrix> diag_blocks;
  diag_blocks.reserve(p.horizon);
  {
    Matrix first = bbt;
    for (std::size_t k = 0; k < n; ++k) first(k, k) += 1.0;
    diag_blocks.push_back(first);
    for (std::size_t i = 1; i < p.horizon; ++i) {
      Matrix blk = symmetrized(aat + bbt);
      for (std::size_t k = 0; k < n; ++k) blk(k, k) += 1.0;
      diag_blocks.push_back(blk);
    }
  }
  const std::vector<Matrix> off_blocks(p.horizon - 1, (-1.0) * p.A.transposed());
  const BlockTridiagCholesky ggt = block_tridiag_cholesky(std::move(diag_blocks), off_blocks);

  Vector gs(p.horizon * n, 0.0);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    std::span<const double> u(s.data() + lay.u_offset(i), m);
    const Vector bu = p.B * u;
    std::span<const double> x_next(s.data() + lay.x_offset(i + 1), n);
    for (std::size_t k = 0; k < n; ++k) gs[i * n + k] = bu[k] - x_next[k];
    if (i > 0) {
      std::span<const double> x(s.data() + lay.x_offset(i), n);
      const Vector ax = p.A * x;
      for (std::size_t k = 0; k < n; ++k) gs[i * n + k] += ax[k];
    }
  }
  for (double& g : gs) g = -g;
  const Vector mu = ggt.solve(gs);

  // s + G' mu
  Vector grad = s;
  for (std::size_t i = 0; i < p.horizon; ++i) {
    std::span<const double> mu_i(mu.data() + i * n, n);
    const Vector btmu = mul_transpose(p.B, mu_i);
    for (std::size_t k = 0; k < m; ++k) grad[lay.u_offset(i) + k] += btmu[k];
    if (i > 0) {
      const Vector atmu = mul_transpose(p.A, mu_i);
      for (std::size_t k = 0; k < n; ++k) grad[lay.x_offset(i) + k] += atmu[k];
    }
    for (std::size_t k = 0; k < n; ++k) grad[lay.x_offset(i + 1) + k] -= mu_i[k];
  }
  r.stationarity = inf_norm(grad);
  return r;
}

}  // namespace ellimpc
