#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/solver.hpp"

namespace ellimpc {

/// Fully materialized splitting data: every structured matrix of the solver
/// assembled densely, with no banded shortcuts anywhere. This exists as an
/// execution oracle for the structured implementation (both must produce the
/// same iterate sequence) and is only meant for small instances.
struct DenseCast {
  StackLayout layout;
  double rho = 0.0;
  Matrix H, Hhat, Hhat_inv;
  Matrix G, Gt;
  Matrix C, D, CtD;  // consensus constraint blocks and their product C'D
  Matrix W, Wc;      // dual system matrix and its dense upper Cholesky factor
  Matrix P_half, P_invhalf;
  Vector q;
};

inline DenseCast build_dense_cast(const MPCProblem& p, double rho) {
  const std::size_t n = p.state_dim();
  const std::size_t m = p.input_dim();
  const StackLayout lay{n, m, p.horizon};
  const std::size_t dim = lay.dim();

  DenseCast d;
  d.layout = lay;
  d.rho = rho;

  auto place = [](Matrix& dst, const Matrix& blk, std::size_t r0, std::size_t c0) {
    for (std::size_t i = 0; i < blk.rows(); ++i)
      for (std::size_t j = 0; j < blk.cols(); ++j) dst(r0 + i, c0 + j) = blk(i, j);
  };

  d.H = Matrix(dim, dim);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    place(d.H, p.R, lay.u_offset(i), lay.u_offset(i));
    if (i + 1 < p.horizon) place(d.H, p.Q, lay.x_offset(i + 1), lay.x_offset(i + 1));
  }
  place(d.H, p.T, lay.terminal_offset(), lay.terminal_offset());

  const SymmetricSqrt root = symmetric_sqrt(p.terminal.P);
  d.P_half = root.half;
  d.P_invhalf = root.inv_half;

  d.C = Matrix(dim, dim);
  for (std::size_t i = 0; i < lay.head_dim(); ++i) d.C(i, i) = 1.0;
  place(d.C, root.half, lay.terminal_offset(), lay.terminal_offset());
  d.D = (-1.0) * d.C;
  d.CtD = d.C.transposed() * d.D;

  d.Hhat = symmetrized(d.H + rho * (d.C.transposed() * d.C));
  d.Hhat_inv = inverse_spd(d.Hhat);

  d.G = Matrix(p.horizon * n, dim);
  for (std::size_t i = 0; i < p.horizon; ++i) {
    place(d.G, p.B, i * n, lay.u_offset(i));
    if (i > 0) place(d.G, p.A, i * n, lay.x_offset(i));
    for (std::size_t k = 0; k < n; ++k) d.G(i * n + k, lay.x_offset(i + 1) + k) = -1.0;
  }
  d.Gt = d.G.transposed();

  d.W = symmetrized(d.G * (d.Hhat_inv * d.Gt));
  d.Wc = cholesky(d.W);

  d.q = build_cost_gradient(p);
  return d;
}

/// The same splitting iteration as the structured solver, executed entirely
/// with dense matrices. Cold start only.
inline SolverResult dense_reference_solve(const MPCProblem& p, std::span<const double> x_t,
                                          double rho, const SolverSettings& settings = {},
                                          const IterationObserver& observer = {}) {
  const DenseCast d = build_dense_cast(p, rho);
  const StackLayout& lay = d.layout;
  const std::size_t dim = lay.dim();
  const std::size_t n = lay.n;
  const StackedBounds sb = stacked_bounds(p);

  Vector b(p.horizon * n, 0.0);
  {
    const Vector ax = p.A * x_t;
    for (std::size_t k = 0; k < n; ++k) b[k] = -ax[k];
  }

  SolverState state;
  state.z.assign(dim, 0.0);
  state.v.assign(dim, 0.0);
  state.lambda.assign(dim, 0.0);
  Vector z_prev = state.z;

  SolverResult result;
  for (std::size_t iter = 0; iter < settings.max_iter; ++iter) {
    // qhat = q + rho C'D v + C' lambda
    Vector qhat = d.q;
    {
      const Vector cdv = d.CtD * state.v;
      const Vector cl = mul_transpose(d.C, state.lambda);
      for (std::size_t i = 0; i < dim; ++i) qhat[i] += rho * cdv[i] + cl[i];
    }

    // dual system and back-substitution for z
    Vector y = d.G * (d.Hhat_inv * qhat);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = -(y[i] + b[i]);
    const Vector mu = solve_upper(d.Wc, solve_upper_transposed(d.Wc, y));
    Vector rhs = d.Gt * mu;
    for (std::size_t i = 0; i < dim; ++i) rhs[i] += qhat[i];
    state.z = d.Hhat_inv * rhs;
    for (double& zi : state.z) zi = -zi;

    // projections
    const double inv_rho = 1.0 / rho;
    for (std::size_t i = 0; i < lay.head_dim(); ++i) {
      const double w = state.z[i] + inv_rho * state.lambda[i];
      state.v[i] = std::max(std::min(w, sb.hi[i]), sb.lo[i]);
    }
    {
      std::span<const double> lam_f(state.lambda.data() + lay.terminal_offset(), n);
      Vector a = d.P_invhalf * lam_f;
      for (std::size_t k = 0; k < n; ++k)
        a[k] = state.z[lay.terminal_offset() + k] + inv_rho * a[k];
      const Vector vf = project_ellipsoid_weighted(a, p.terminal);
      for (std::size_t k = 0; k < n; ++k) state.v[lay.terminal_offset() + k] = vf[k];
    }

    // dual ascent and residuals, both through the dense constraint blocks
    Vector cz = d.C * state.z;
    const Vector dv = d.D * state.v;
    for (std::size_t i = 0; i < dim; ++i) cz[i] += dv[i];
    for (std::size_t i = 0; i < dim; ++i) state.lambda[i] += rho * cz[i];
    ++state.k;

    Residuals res;
    res.r_p = inf_norm(cz);
    for (std::size_t i = 0; i < dim; ++i)
      res.r_d = std::max(res.r_d, std::abs(state.z[i] - z_prev[i]));
    z_prev = state.z;
    if (observer) observer(state, res);
    result.residuals = res;
    if (res.r_p <= settings.eps_p && res.r_d <= settings.eps_d) {
      result.status = SolveStatus::converged;
      break;
    }
  }

  result.iterations = state.k;
  result.z = state.z;
  result.v = state.v;
  result.lambda = state.lambda;
  result.u_apply.assign(state.v.begin(), state.v.begin() + static_cast<std::ptrdiff_t>(lay.m));
  return result;
}

}  // namespace ellimpc
