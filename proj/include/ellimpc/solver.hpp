#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "ellimpc/ellipsoid.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/offline.hpp"
#include "ellimpc/problem.hpp"

namespace ellimpc {

enum class WarmStart { cold, keep, shift };
enum class SolveStatus { converged, max_iterations };

struct SolverSettings {
  double eps_p = 1e-3;
  double eps_d = 1e-3;
  std::size_t max_iter = 4000;
  WarmStart warmstart = WarmStart::cold;
};

struct Residuals {
  double r_p = 0.0;  // consensus mismatch between the two variable copies
  double r_d = 0.0;  // change of the equality-constrained iterate
};

/// Iterates of the operator-splitting loop. The first N*m + (N-1)*n entries
/// of each vector are the stage blocks (u_0, x_1, ..., u_{N-1}); the last n
/// entries belong to the terminal state.
struct SolverState {
  Vector z, v, lambda;
  std::size_t k = 0;
};

struct SolverResult {
  Vector z, v, lambda;
  std::size_t iterations = 0;
  Residuals residuals;
  SolveStatus status = SolveStatus::max_iterations;
  Vector u_apply;  // first input block of v, the action to apply
};

using IterationObserver = std::function<void(const SolverState&, const Residuals&)>;

/// Linear cost term q = -(R u_r, Q x_r, ..., Q x_r, R u_r, T x_r).
inline Vector build_cost_gradient(const MPCProblem& p) {
  const StackLayout lay{p.state_dim(), p.input_dim(), p.horizon};
  Vector q(lay.dim());
  const Vector ru = p.R * p.u_ref;
  const Vector qx = p.Q * p.x_ref;
  const Vector tx = p.T * p.x_ref;
  for (std::size_t i = 0; i < p.horizon; ++i) {
    for (std::size_t k = 0; k < lay.m; ++k) q[lay.u_offset(i) + k] = -ru[k];
    if (i + 1 < p.horizon)
      for (std::size_t k = 0; k < lay.n; ++k) q[lay.x_offset(i + 1) + k] = -qx[k];
  }
  for (std::size_t k = 0; k < lay.n; ++k) q[lay.terminal_offset() + k] = -tx[k];
  return q;
}

/// Equality right-hand side b = (-A x(t), 0, ..., 0).
inline Vector build_dynamics_rhs(const OfflineData& off, std::span<const double> x_t) {
  assert(x_t.size() == off.n);
  Vector b(off.horizon * off.n, 0.0);
  const Vector ax = off.A * x_t;
  for (std::size_t k = 0; k < off.n; ++k) b[k] = -ax[k];
  return b;
}

struct StackedBounds {
  Vector lo, hi;  // stage blocks only
};

inline StackedBounds stacked_bounds(const MPCProblem& p) {
  const StackLayout lay{p.state_dim(), p.input_dim(), p.horizon};
  StackedBounds sb{Vector(lay.head_dim()), Vector(lay.head_dim())};
  for (std::size_t i = 0; i < p.horizon; ++i) {
    for (std::size_t k = 0; k < lay.m; ++k) {
      sb.lo[lay.u_offset(i) + k] = p.bounds.u_lo[i][k];
      sb.hi[lay.u_offset(i) + k] = p.bounds.u_hi[i][k];
    }
    if (i + 1 < p.horizon) {
      for (std::size_t k = 0; k < lay.n; ++k) {
        sb.lo[lay.x_offset(i + 1) + k] = p.bounds.x_lo[i][k];
        sb.hi[lay.x_offset(i + 1) + k] = p.bounds.x_hi[i][k];
      }
    }
  }
  return sb;
}

/// Shifted linear term of the equality-constrained subproblem:
///   qhat = q + (lambda_stage - rho v_stage, P^{1/2} lambda_f - rho P v_f).
/// Everything except the terminal block is plain vector arithmetic.
inline Vector compute_qhat(const OfflineData& off, std::span<const double> q,
                           std::span<const double> v, std::span<const double> lambda) {
  const StackLayout lay = off.layout();
  Vector qhat(q.begin(), q.end());
  const std::size_t head = lay.head_dim();
  for (std::size_t i = 0; i < head; ++i) qhat[i] += lambda[i] - off.rho * v[i];
  std::span<const double> lam_f(lambda.data() + head, off.n);
  std::span<const double> v_f(v.data() + head, off.n);
  const Vector a = off.P_half * lam_f;
  const Vector b = off.rhoP * v_f;
  for (std::size_t k = 0; k < off.n; ++k) qhat[head + k] += a[k] - b[k];
  return qhat;
}

struct ZStep {
  Vector z;
  Vector mu;  // multiplier of the dynamics constraints
};

/// Solve the equality-constrained quadratic subproblem through the banded
/// dual system:
///   W mu = -(G Hhat^{-1} qhat + b),  z = -Hhat^{-1} (G' mu + qhat).
inline ZStep z_update(const OfflineData& off, std::span<const double> qhat,
                      std::span<const double> b) {
  const Vector hq = apply_cost_inverse(off, qhat);
  Vector y = apply_dynamics(off, hq);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = -(y[i] + b[i]);
  Vector mu = off.Wc.solve(y);
  Vector gt = apply_dynamics_transpose(off, mu);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += qhat[i];
  Vector z = apply_cost_inverse(off, gt);
  for (double& zi : z) zi = -zi;
  return {std::move(z), std::move(mu)};
}

/// Separable projection step: clip the stage blocks onto their boxes and
/// shrink the terminal block onto the ellipsoid in the P-metric.
inline Vector v_update(const OfflineData& off, std::span<const double> z,
                       std::span<const double> lambda, const StackedBounds& bounds,
                       const Ellipsoid& terminal) {
  const StackLayout lay = off.layout();
  const std::size_t head = lay.head_dim();
  Vector v(lay.dim());
  const double inv_rho = 1.0 / off.rho;
  for (std::size_t i = 0; i < head; ++i) {
    const double w = z[i] + inv_rho * lambda[i];
    v[i] = std::max(std::min(w, bounds.hi[i]), bounds.lo[i]);
  }
  std::span<const double> lam_f(lambda.data() + head, off.n);
  Vector a = off.P_invhalf * lam_f;
  for (std::size_t k = 0; k < off.n; ++k) a[k] = z[head + k] + inv_rho * a[k];
  const Vector vf = project_ellipsoid_weighted(a, terminal);
  for (std::size_t k = 0; k < off.n; ++k) v[head + k] = vf[k];
  return v;
}

/// lambda_stage += rho (z - v), lambda_f += rho P^{1/2} (z_f - v_f).
inline Vector dual_update(const OfflineData& off, std::span<const double> lambda,
                          std::span<const double> z, std::span<const double> v) {
  const StackLayout lay = off.layout();
  const std::size_t head = lay.head_dim();
  Vector out(lambda.begin(), lambda.end());
  for (std::size_t i = 0; i < head; ++i) out[i] += off.rho * (z[i] - v[i]);
  Vector diff(off.n);
  for (std::size_t k = 0; k < off.n; ++k) diff[k] = z[head + k] - v[head + k];
  const Vector scaled = off.P_half * diff;
  for (std::size_t k = 0; k < off.n; ++k) out[head + k] += off.rho * scaled[k];
  return out;
}

/// Primal residual over both blocks (stage mismatch and P^{1/2}-scaled
/// terminal mismatch) and dual residual as the iterate change.
inline Residuals compute_residuals(const OfflineData& off, std::span<const double> z,
                                   std::span<const double> v,
                                   std::span<const double> z_prev) {
  const StackLayout lay = off.layout();
  const std::size_t head = lay.head_dim();
  Residuals res;
  for (std::size_t i = 0; i < head; ++i)
    res.r_p = std::max(res.r_p, std::abs(z[i] - v[i]));
  Vector diff(off.n);
  for (std::size_t k = 0; k < off.n; ++k) diff[k] = z[head + k] - v[head + k];
  const Vector scaled = off.P_half * diff;
  res.r_p = std::max(res.r_p, inf_norm(scaled));
  for (std::size_t i = 0; i < z.size(); ++i)
    res.r_d = std::max(res.r_d, std::abs(z[i] - z_prev[i]));
  return res;
}

/// Online solver. One instance owns its iterates (warm starts reuse them);
/// distinct instances may share the same problem and offline data across
/// threads. The referenced problem and offline data must outlive the solver.
class AdmmSolver {
 public:
  AdmmSolver(const MPCProblem& problem, const OfflineData& offline,
             SolverSettings settings = {})
      : problem_(&problem),
        offline_(&offline),
        settings_(settings),
        q_(build_cost_gradient(problem)),
        bounds_(stacked_bounds(problem)) {
    reset();
  }

  SolverSettings& settings() noexcept { return settings_; }
  const SolverSettings& settings() const noexcept { return settings_; }
  const SolverState& state() const noexcept { return state_; }

  void set_observer(IterationObserver obs) { observer_ = std::move(obs); }

  /// Drop retained iterates; the next solve starts from zero regardless of
  /// the warm-start mode.
  void reset() {
    const std::size_t dim = offline_->layout().dim();
    state_.z.assign(dim, 0.0);
    state_.v.assign(dim, 0.0);
    state_.lambda.assign(dim, 0.0);
    state_.k = 0;
    have_previous_ = false;
  }

  /// References may have changed (the center, radius and reference can move
  /// between sample times without an offline rebuild); call after mutating
  /// the problem's references.
  void refresh_references() { q_ = build_cost_gradient(*problem_); }

  SolverResult solve(std::span<const double> x_t) {
    prepare_start();
    const Vector b = build_dynamics_rhs(*offline_, x_t);

    Vector z_prev = state_.z;
    SolverResult result;
    state_.k = 0;
    for (std::size_t iter = 0; iter < settings_.max_iter; ++iter) {
      const Vector qhat = compute_qhat(*offline_, q_, state_.v, state_.lambda);
      ZStep zs = z_update(*offline_, qhat, b);
      state_.z = std::move(zs.z);
      state_.v = v_update(*offline_, state_.z, state_.lambda, bounds_, problem_->terminal);
      state_.lambda = dual_update(*offline_, state_.lambda, state_.z, state_.v);
      ++state_.k;
      const Residuals res = compute_residuals(*offline_, state_.z, state_.v, z_prev);
      z_prev = state_.z;
      if (observer_) observer_(state_, res);
      result.residuals = res;
      if (res.r_p <= settings_.eps_p && res.r_d <= settings_.eps_d) {
        result.status = SolveStatus::converged;
        break;
      }
    }
    have_previous_ = true;

    result.iterations = state_.k;
    result.z = state_.z;
    result.v = state_.v;
    result.lambda = state_.lambda;
    result.u_apply.assign(state_.v.begin(),
                          state_.v.begin() + static_cast<std::ptrdiff_t>(offline_->m));
    return result;
  }

 private:
  void prepare_start() {
    if (!have_previous_ || settings_.warmstart == WarmStart::cold) {
      const std::size_t dim = offline_->layout().dim();
      state_.z.assign(dim, 0.0);
      state_.v.assign(dim, 0.0);
      state_.lambda.assign(dim, 0.0);
      return;
    }
    if (settings_.warmstart == WarmStart::shift) {
      shift_stages(state_.z, true);
      shift_stages(state_.v, true);
      // the terminal multiplier lives in P^{1/2}-scaled units, so it stays
      // put; its stage blocks shift with the last one repeated
      shift_stages(state_.lambda, false);
    }
    // WarmStart::keep leaves the iterates untouched
  }

  /// Move every stage block one step earlier, repeating the last stage. When
  /// `pull_terminal` is set the last stage state takes the terminal value.
  void shift_stages(Vector& w, bool pull_terminal) const {
    const StackLayout lay = offline_->layout();
    for (std::size_t i = 0; i + 1 < lay.horizon; ++i)
      for (std::size_t k = 0; k < lay.m; ++k)
        w[lay.u_offset(i) + k] = w[lay.u_offset(i + 1) + k];
    for (std::size_t i = 1; i + 1 < lay.horizon; ++i)
      for (std::size_t k = 0; k < lay.n; ++k)
        w[lay.x_offset(i) + k] = w[lay.x_offset(i + 1) + k];
    if (pull_terminal && lay.horizon >= 2) {
      for (std::size_t k = 0; k < lay.n; ++k)
        w[lay.x_offset(lay.horizon - 1) + k] = w[lay.terminal_offset() + k];
    }
  }

  const MPCProblem* problem_;
  const OfflineData* offline_;
  SolverSettings settings_;
  Vector q_;
  StackedBounds bounds_;
  SolverState state_;
  IterationObserver observer_;
  bool have_previous_ = false;
};

/// One-shot cold-started solve.
inline SolverResult admm_solve(const MPCProblem& problem, const OfflineData& offline,
                               std::span<const double> x_t,
                               const SolverSettings& settings = {},
                               const IterationObserver& observer = {}) {
  SolverSettings s = settings;
  s.warmstart = WarmStart::cold;
  AdmmSolver solver(problem, offline, s);
  if (observer) solver.set_observer(observer);
  return solver.solve(x_t);
}

}  // namespace ellimpc
