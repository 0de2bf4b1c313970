#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ellimpc/discretize.hpp"
#include "ellimpc/errors.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/solver.hpp"
#include "ellimpc/terminal.hpp"

namespace ellimpc {

struct PlantModel {
  Matrix A, B;
  std::vector<std::string> state_labels;
  std::vector<std::string> input_labels;
};

struct StepRecord {
  std::size_t t = 0;
  Vector x, u;
  std::size_t iterations = 0;
  double r_p = 0.0, r_d = 0.0;
  double solve_ms = 0.0;
  bool terminal_active = false;
  SolveStatus status = SolveStatus::converged;
};

struct ClosedLoopLog {
  std::vector<StepRecord> steps;
};

// ---------------------------------------------------------------------------
// Three-mass benchmark plant: a chain of three objects coupled by springs,
// with the outer objects also anchored to the walls, and a force input on
// each outer object. Positions are kept in decimetres (velocities in m/s),
// which conditions the discrete model well; spring deflections convert back
// to metres inside the dynamics.
// ---------------------------------------------------------------------------

struct ThreeMassConfig {
  double mass_outer = 1.0;     // kg
  double mass_center = 0.5;    // kg
  double spring = 2.0;         // N/m
  double sample_time = 0.2;    // s
  std::size_t horizon = 10;
  double position_min = -10.0;  // dm
  double position_max = 3.0;    // dm
  double force_max = 0.8;       // N
  double velocity_limit = 100.0;  // m/s, far outside anything reachable
};

struct CaseStudy {
  PlantModel plant;
  MPCProblem problem;  // terminal ingredients not yet filled in
};

struct ContinuousModel {
  Matrix A_c, B_c;
};

/// Continuous dynamics of the chain. States (p1, p2, p3, v1, v2, v3):
/// dp/dt = 10 v [dm/s]; spring forces act on p/10 [m]; wall springs on both
/// outer objects plus the two couplers.
inline ContinuousModel three_mass_continuous(const ThreeMassConfig& cfg = {}) {
  const double k = cfg.spring;
  const double m1 = cfg.mass_outer, m2 = cfg.mass_center, m3 = cfg.mass_outer;
  Matrix a_c(6, 6), b_c(6, 2);
  for (std::size_t i = 0; i < 3; ++i) a_c(i, 3 + i) = 10.0;
  const double c = k / 10.0;
  a_c(3, 0) = -2.0 * c / m1;
  a_c(3, 1) = c / m1;
  a_c(4, 0) = c / m2;
  a_c(4, 1) = -2.0 * c / m2;
  a_c(4, 2) = c / m2;
  a_c(5, 1) = c / m3;
  a_c(5, 2) = -2.0 * c / m3;
  b_c(3, 0) = 1.0 / m1;
  b_c(5, 1) = 1.0 / m3;
  return {a_c, b_c};
}

/// Discrete model and problem skeleton for the benchmark. The terminal
/// ellipsoid and terminal cost are left at placeholders; fill them with
/// build_terminal_set (see build_case_study_problem).
inline CaseStudy build_three_mass_model(const ThreeMassConfig& cfg = {}) {
  const ContinuousModel cm = three_mass_continuous(cfg);
  const DiscreteModel dm = zoh_discretize(cm.A_c, cm.B_c, cfg.sample_time);

  CaseStudy cs;
  cs.plant.A = dm.A;
  cs.plant.B = dm.B;
  cs.plant.state_labels = {"p1[dm]", "p2[dm]", "p3[dm]", "v1[m/s]", "v2[m/s]", "v3[m/s]"};
  cs.plant.input_labels = {"Ff[N]", "Fl[N]"};

  MPCProblem& p = cs.problem;
  p.A = dm.A;
  p.B = dm.B;
  p.Q = Matrix::diagonal(Vector{15.0, 15.0, 15.0, 1.0, 1.0, 1.0});
  p.R = Matrix::diagonal(Vector{0.1, 0.1});
  p.T = Matrix::identity(6);  // placeholder until the terminal cost is built
  p.horizon = cfg.horizon;

  const Vector x_lo{cfg.position_min, cfg.position_min, cfg.position_min,
                    -cfg.velocity_limit, -cfg.velocity_limit, -cfg.velocity_limit};
  const Vector x_hi{cfg.position_max, cfg.position_max, cfg.position_max,
                    cfg.velocity_limit, cfg.velocity_limit, cfg.velocity_limit};
  const Vector u_lo{-cfg.force_max, -cfg.force_max};
  const Vector u_hi{cfg.force_max, cfg.force_max};
  p.bounds = StageBounds::uniform(x_lo, x_hi, u_lo, u_hi, cfg.horizon);

  p.x_ref = {2.5, 2.5, 2.5, 0.0, 0.0, 0.0};
  p.u_ref = {0.5, 0.5};
  p.terminal = Ellipsoid{Matrix::identity(6), p.x_ref, 1.0};  // placeholder
  return cs;
}

/// Constraint polytope the terminal set must respect: position and force
/// rows only (the velocity limits are sentinels and never bind, but keeping
/// them would not change the radius).
inline PolytopeConstraints case_study_polytope(const MPCProblem& p) {
  const StageBounds& b = p.bounds;
  return box_polytope(b.x_lo.back(), b.x_hi.back(), b.u_lo.back(), b.u_hi.back());
}

/// The complete benchmark problem: skeleton plus terminal gain, cost and
/// invariant ellipsoid from the fixed-shape construction.
inline MPCProblem build_case_study_problem(const ThreeMassConfig& cfg = {}) {
  CaseStudy cs = build_three_mass_model(cfg);
  MPCProblem p = std::move(cs.problem);
  const TerminalIngredients ti =
      build_terminal_set(p.A, p.B, p.Q, p.R, case_study_polytope(p), p.x_ref, p.u_ref);
  p.T = ti.T;
  p.terminal = ti.set;
  return p;
}

/// Run the receding-horizon loop: solve, apply the first input of v, step
/// the plant exactly, repeat. A non-converged solve is logged and flagged
/// but the loop continues with the returned action.
inline ClosedLoopLog closed_loop_simulate(const MPCProblem& problem, const OfflineData& offline,
                                          const PlantModel& plant, Vector x0,
                                          std::size_t steps,
                                          const SolverSettings& settings = {}) {
  AdmmSolver solver(problem, offline, settings);
  ClosedLoopLog log;
  log.steps.reserve(steps);
  Vector x = std::move(x0);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const SolverResult res = solver.solve(x);
    const auto stop = std::chrono::steady_clock::now();

    StepRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = res.u_apply;
    rec.iterations = res.iterations;
    rec.r_p = res.residuals.r_p;
    rec.r_d = res.residuals.r_d;
    rec.solve_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    rec.status = res.status;
    std::span<const double> v_f(res.v.data() + offline.layout().terminal_offset(),
                                offline.n);
    rec.terminal_active =
        std::sqrt(problem.terminal.quadratic(v_f)) >= problem.terminal.r - 1e-6;
    log.steps.push_back(std::move(rec));

    x = plant.A * x + std::span<const double>(plant.B * res.u_apply);
  }
  return log;
}

struct OrderStats {
  double average = 0.0;
  double median = 0.0;  // lower median for even counts
  double max = 0.0;
  double min = 0.0;
};

struct SimStats {
  OrderStats iterations;
  OrderStats solve_ms;
};

inline OrderStats order_stats(Vector values) {
  OrderStats s;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  s.average = total / static_cast<double>(values.size());
  s.median = values[(values.size() - 1) / 2];
  s.min = values.front();
  s.max = values.back();
  return s;
}

inline SimStats summarize_stats(const ClosedLoopLog& log) {
  if (log.steps.empty()) throw EmptyLog("summarize_stats: log has no steps");
  Vector iters, times;
  iters.reserve(log.steps.size());
  times.reserve(log.steps.size());
  for (const StepRecord& r : log.steps) {
    iters.push_back(static_cast<double>(r.iterations));
    times.push_back(r.solve_ms);
  }
  return {order_stats(std::move(iters)), order_stats(std::move(times))};
}

/// CSV export, one row per sample time, floats at full precision.
inline void write_csv(const ClosedLoopLog& log, std::ostream& os) {
  if (log.steps.empty()) throw EmptyLog("write_csv: log has no steps");
  const std::size_t n = log.steps.front().x.size();
  const std::size_t m = log.steps.front().u.size();
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= m; ++i) os << ",u" << i;
  os << ",iters,rp,rd,solve_ms,terminal_active\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (const StepRecord& r : log.steps) {
    os << r.t;
    for (double v : r.x) put(v);
    for (double v : r.u) put(v);
    os << ',' << r.iterations;
    put(r.r_p);
    put(r.r_d);
    put(r.solve_ms);
    os << ',' << (r.terminal_active ? 1 : 0) << '\n';
  }
}

}  // namespace ellimpc
