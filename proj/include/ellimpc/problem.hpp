#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ellimpc/ellipsoid.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Per-step state and input boxes. State bounds apply to prediction steps
/// 1..N-1 (the initial state is fixed and the terminal state is handled by
/// the ellipsoid); input bounds apply to steps 0..N-1.
struct StageBounds {
  std::vector<Vector> x_lo, x_hi;  // size N-1, indexed by step-1
  std::vector<Vector> u_lo, u_hi;  // size N, indexed by step

  static StageBounds uniform(const Vector& xl, const Vector& xh, const Vector& ul,
                             const Vector& uh, std::size_t horizon) {
    StageBounds b;
    b.x_lo.assign(horizon - 1, xl);
    b.x_hi.assign(horizon - 1, xh);
    b.u_lo.assign(horizon, ul);
    b.u_hi.assign(horizon, uh);
    return b;
  }
};

/// Everything that defines one tracking MPC instance: model, quadratic
/// costs, per-step boxes, terminal ellipsoid, steady-state reference and
/// horizon. Immutable once built; share freely across threads.
struct MPCProblem {
  Matrix A, B;       // x+ = A x + B u
  Matrix Q, R, T;    // stage state, stage input, terminal costs
  std::size_t horizon = 0;
  StageBounds bounds;
  Ellipsoid terminal;
  Vector x_ref, u_ref;

  /// Forces the componentwise cost path on or off; unset means autodetect
  /// from the sparsity of Q and R.
  std::optional<bool> diagonal_costs;

  std::size_t state_dim() const noexcept { return A.rows(); }
  std::size_t input_dim() const noexcept { return B.cols(); }

  bool costs_are_diagonal() const {
    if (diagonal_costs.has_value()) return *diagonal_costs;
    auto is_diag = [](const Matrix& m) {
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
          if (i != j && m(i, j) != 0.0) return false;
      return true;
    };
    return is_diag(Q) && is_diag(R);
  }
};

struct ValidationIssue {
  std::string code;     // stable identifier, e.g. "bounds.x.order"
  std::string message;  // human-readable detail including offending index
  int step = -1;        // prediction step where applicable
};

namespace detail {

inline void check_psd(const Matrix& m, const std::string& name,
                      std::vector<ValidationIssue>& issues) {
  if (m.rows() != m.cols()) {
    issues.push_back({"cost.shape", name + " is not square"});
    return;
  }
  const double scale = std::max(1.0, max_abs(m));
  if (symmetry_error(m) > 1e-12 * scale) {
    issues.push_back({"cost.symmetry", name + " is not symmetric"});
    return;
  }
  if (min_eigenvalue(m) < -1e-10 * scale) {
    issues.push_back({"cost.psd", name + " has a negative eigenvalue"});
  }
}

}  // namespace detail

/// Static validation of every problem invariant. Reports all violations
/// instead of stopping at the first; an empty result means the problem is
/// well formed. Feasibility of a particular initial state is a solve-time
/// property and is not checked here.
inline std::vector<ValidationIssue> validate(const MPCProblem& p,
                                             double steady_state_tol = 1e-8) {
  std::vector<ValidationIssue> issues;
  const std::size_t n = p.state_dim();
  const std::size_t m = p.input_dim();

  if (p.horizon < 2) issues.push_back({"horizon", "horizon must be at least 2"});
  if (p.A.rows() != n || p.A.cols() != n || p.B.rows() != n)
    issues.push_back({"model.shape", "A must be n x n and B must be n x m"});
  if (!all_finite(p.A) || !all_finite(p.B))
    issues.push_back({"model.finite", "model matrices contain non-finite entries"});

  if (p.Q.rows() != n) issues.push_back({"cost.shape", "Q dimension mismatch"});
  if (p.R.rows() != m) issues.push_back({"cost.shape", "R dimension mismatch"});
  if (p.T.rows() != n) issues.push_back({"cost.shape", "T dimension mismatch"});
  if (p.Q.rows() == n && p.Q.cols() == n) detail::check_psd(p.Q, "Q", issues);
  if (p.R.rows() == m && p.R.cols() == m) detail::check_psd(p.R, "R", issues);
  if (p.T.rows() == n && p.T.cols() == n) detail::check_psd(p.T, "T", issues);

  const std::size_t horizon = p.horizon;
  if (p.bounds.x_lo.size() + 1 != horizon || p.bounds.x_hi.size() + 1 != horizon)
    issues.push_back({"bounds.count", "state bounds must cover steps 1..N-1"});
  if (p.bounds.u_lo.size() != horizon || p.bounds.u_hi.size() != horizon)
    issues.push_back({"bounds.count", "input bounds must cover steps 0..N-1"});

  auto check_box = [&issues](const std::vector<Vector>& lo, const std::vector<Vector>& hi,
                             std::size_t dim, const std::string& what, int first_step) {
    for (std::size_t i = 0; i < lo.size() && i < hi.size(); ++i) {
      const int step = first_step + static_cast<int>(i);
      if (lo[i].size() != dim || hi[i].size() != dim) {
        issues.push_back({"bounds." + what + ".shape",
                          what + " bound dimension mismatch at step " + std::to_string(step),
                          step});
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        if (!(lo[i][j] < hi[i][j])) {
          issues.push_back({"bounds." + what + ".order",
                            what + " bound not strictly ordered at step " +
                                std::to_string(step) + ", component " + std::to_string(j),
                            step});
          break;
        }
      }
    }
  };
  check_box(p.bounds.x_lo, p.bounds.x_hi, n, "x", 1);
  check_box(p.bounds.u_lo, p.bounds.u_hi, m, "u", 0);

  if (p.terminal.P.rows() != n || p.terminal.c.size() != n) {
    issues.push_back({"terminal.shape", "terminal set dimension mismatch"});
  } else {
    if (!(p.terminal.r > 0.0))
      issues.push_back({"terminal.radius", "terminal radius must be positive"});
    const double scale = std::max(1.0, max_abs(p.terminal.P));
    if (symmetry_error(p.terminal.P) > 1e-12 * scale)
      issues.push_back({"terminal.symmetry", "terminal shape matrix is not symmetric"});
    else if (min_eigenvalue(p.terminal.P) <= 0.0)
      issues.push_back({"terminal.pd", "terminal shape matrix is not positive definite"});
  }

  if (p.x_ref.size() != n || p.u_ref.size() != m) {
    issues.push_back({"reference.shape", "reference dimension mismatch"});
  } else if (p.A.rows() == n && p.A.cols() == n && p.B.rows() == n) {
    const Vector residual = p.A * p.x_ref + std::span<const double>(p.B * p.u_ref) -
                            std::span<const double>(p.x_ref);
    if (inf_norm(residual) > steady_state_tol) {
      issues.push_back({"reference.steady_state",
                        "reference is not a steady state (residual " +
                            std::to_string(inf_norm(residual)) + ")"});
    }
  }
  return issues;
}

}  // namespace ellimpc
