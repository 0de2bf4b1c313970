// Command-line front end for the ellimpc library: validate problem files,
// construct terminal sets, run single solves, closed-loop simulations and
// horizon-scaling benchmarks.
//
// Exit codes: 0 success, 1 domain failure, 2 file/parse failure,
// 3 solver did not converge.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ellimpc/ellimpc.hpp"
#include "ellimpc/json_io.hpp"

namespace {

using nlohmann::json;
using namespace ellimpc;

enum class LogLevel { off, info, trace };

LogLevel log_level() {
  const char* env = std::getenv("ELLIMPC_LOG");
  if (env == nullptr) return LogLevel::off;
  const std::string v(env);
  if (v == "trace") return LogLevel::trace;
  if (v == "info") return LogLevel::info;
  return LogLevel::off;
}

void info(const std::string& line) {
  if (log_level() >= LogLevel::info) std::cerr << "[ellimpc] " << line << '\n';
}

IterationObserver trace_observer() {
  if (log_level() < LogLevel::trace) return {};
  return [](const SolverState& s, const Residuals& r) {
    std::cerr << "[trace] k=" << s.k << " rp=" << r.r_p << " rd=" << r.r_d << '\n';
  };
}

Vector parse_csv_doubles(const std::string& text) {
  Vector out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stod(token));
  }
  return out;
}

void write_output(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(out_path);
  if (!os) throw ParseError("cannot open output file " + out_path);
  os << j.dump(2) << '\n';
}

struct SolveFlags {
  double rho = 15.0;
  double eps_p = 1e-3;
  double eps_d = 1e-3;
  std::size_t max_iter = 4000;
  std::string diagonal = "auto";
  std::string warmstart = "cold";
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f, bool with_warmstart) {
  cmd->add_option("--rho", f.rho, "penalty parameter (offline data is built for it)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eps-p", f.eps_p, "primal exit tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-d", f.eps_d, "dual exit tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "iteration cap");
  cmd->add_option("--diagonal-costs", f.diagonal,
                  "componentwise cost path: auto, on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  if (with_warmstart) {
    cmd->add_option("--warmstart", f.warmstart, "cold, keep or shift")
        ->check(CLI::IsMember({"cold", "keep", "shift"}));
  }
}

void apply_flags(MPCProblem& p, SolverSettings& s, const SolveFlags& f) {
  if (f.diagonal == "on") p.diagonal_costs = true;
  if (f.diagonal == "off") p.diagonal_costs = false;
  s.eps_p = f.eps_p;
  s.eps_d = f.eps_d;
  s.max_iter = f.max_iter;
  if (f.warmstart == "keep") s.warmstart = WarmStart::keep;
  if (f.warmstart == "shift") s.warmstart = WarmStart::shift;
}

json stats_to_json(const OrderStats& s) {
  return json{{"average", s.average}, {"median", s.median}, {"max", s.max}, {"min", s.min}};
}

int cmd_validate(const std::string& file) {
  const MPCProblem p = load_problem(file);
  const auto issues = validate(p);
  json report;
  report["valid"] = issues.empty();
  report["issues"] = json::array();
  for (const auto& issue : issues) {
    json item{{"code", issue.code}, {"message", issue.message}};
    if (issue.step >= 0) item["step"] = issue.step;
    report["issues"].push_back(std::move(item));
  }
  std::cout << report.dump(2) << '\n';
  return issues.empty() ? 0 : 1;
}

int cmd_terminal(const std::string& file, const std::string& out_path) {
  const MPCProblem p = load_problem(file, /*require_terminal=*/false);
  const PolytopeConstraints pc = box_polytope(p.bounds.x_lo.back(), p.bounds.x_hi.back(),
                                              p.bounds.u_lo.back(), p.bounds.u_hi.back());
  const TerminalIngredients ti =
      build_terminal_set(p.A, p.B, p.Q, p.R, pc, p.x_ref, p.u_ref);
  info("terminal set: r = " + std::to_string(ti.set.r) +
       ", lambda = " + std::to_string(ti.lambda));
  write_output(terminal_to_json(ti), out_path);
  return 0;
}

int cmd_solve(const std::string& file, const std::string& x0_text, const SolveFlags& flags,
              const std::string& out_path) {
  MPCProblem p = load_problem(file);
  SolverSettings settings;
  apply_flags(p, settings, flags);
  Vector x0 = x0_text.empty() ? Vector(p.state_dim(), 0.0) : parse_csv_doubles(x0_text);
  if (x0.size() != p.state_dim())
    throw std::invalid_argument("--x0 must have " + std::to_string(p.state_dim()) +
                                " components");

  const OfflineData off = build_offline(p, flags.rho);
  const SolverResult res = admm_solve(p, off, x0, settings, trace_observer());

  json out;
  out["status"] = res.status == SolveStatus::converged ? "converged" : "max-iterations";
  out["iterations"] = res.iterations;
  out["r_p"] = res.residuals.r_p;
  out["r_d"] = res.residuals.r_d;
  out["u_apply"] = res.u_apply;
  write_output(out, out_path);
  info("solve: " + std::string(out["status"].get<std::string>()) + " after " +
       std::to_string(res.iterations) + " iterations");
  return res.status == SolveStatus::converged ? 0 : 3;
}

int cmd_simulate(const std::string& file, std::size_t steps, const std::string& x0_text,
                 const SolveFlags& flags, const std::string& out_path) {
  MPCProblem p = load_problem(file);
  SolverSettings settings;
  apply_flags(p, settings, flags);
  Vector x0 = x0_text.empty() ? Vector(p.state_dim(), 0.0) : parse_csv_doubles(x0_text);
  if (x0.size() != p.state_dim())
    throw std::invalid_argument("--x0 must have " + std::to_string(p.state_dim()) +
                                " components");

  const OfflineData off = build_offline(p, flags.rho);
  const PlantModel plant{p.A, p.B, {}, {}};
  const ClosedLoopLog log = closed_loop_simulate(p, off, plant, x0, steps, settings);
  const SimStats stats = summarize_stats(log);  // throws EmptyLog for steps = 0

  std::ofstream os(out_path);
  if (!os) throw ParseError("cannot open output file " + out_path);
  write_csv(log, os);

  json out;
  out["steps"] = log.steps.size();
  out["iterations"] = stats_to_json(stats.iterations);
  out["solve_ms"] = stats_to_json(stats.solve_ms);
  std::size_t failures = 0;
  for (const auto& rec : log.steps)
    if (rec.status != SolveStatus::converged) ++failures;
  out["non_converged_steps"] = failures;
  out["log"] = out_path;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_bench(const std::string& file, std::vector<std::size_t> horizons,
              std::size_t bench_iters, std::size_t repeats, unsigned seed,
              const SolveFlags& flags, const std::string& out_path) {
  MPCProblem base = load_problem(file);
  if (flags.diagonal == "on") base.diagonal_costs = true;
  if (flags.diagonal == "off") base.diagonal_costs = false;
  std::mt19937 rng(seed);

  json table = json::array();
  for (std::size_t horizon : horizons) {
    MPCProblem p = base;
    p.horizon = horizon;
    p.bounds = StageBounds::uniform(base.bounds.x_lo.front(), base.bounds.x_hi.front(),
                                    base.bounds.u_lo.front(), base.bounds.u_hi.front(),
                                    horizon);
    const OfflineData off = build_offline(p, flags.rho);

    // start near the reference; convergence is irrelevant, the solver runs a
    // fixed number of iterations to expose the per-iteration cost
    Vector x0 = p.x_ref;
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double span = p.bounds.x_hi.front()[i] - p.bounds.x_lo.front()[i];
      x0[i] += 0.05 * span * jitter(rng);
    }

    SolverSettings settings;
    settings.eps_p = settings.eps_d = 1e-300;  // unreachable: run every iteration
    settings.max_iter = bench_iters;

    std::vector<double> per_iter_us;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      const SolverResult res = admm_solve(p, off, x0, settings);
      const auto stop = std::chrono::steady_clock::now();
      const double us = std::chrono::duration<double, std::micro>(stop - start).count();
      per_iter_us.push_back(us / static_cast<double>(res.iterations));
    }
    std::sort(per_iter_us.begin(), per_iter_us.end());
    const double median_us = per_iter_us[(per_iter_us.size() - 1) / 2];

    table.push_back(json{{"N", horizon},
                         {"offline_floats", off.stored_float_count()},
                         {"us_per_iteration", median_us}});
    info("bench N=" + std::to_string(horizon) + ": " + std::to_string(median_us) +
         " us/iteration");
  }
  write_output(table, out_path);
  return 0;
}

int cmd_casestudy(const std::string& out_path) {
  CaseStudy cs = build_three_mass_model();
  MPCProblem& p = cs.problem;
  const TerminalIngredients ti = build_terminal_set(
      p.A, p.B, p.Q, p.R, case_study_polytope(p), p.x_ref, p.u_ref);
  p.T = ti.T;
  p.terminal = ti.set;
  save_problem(p, out_path);

  json out;
  out["file"] = out_path;
  out["n"] = p.state_dim();
  out["m"] = p.input_dim();
  out["N"] = p.horizon;
  out["r"] = ti.set.r;
  out["lambda"] = ti.lambda;
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse MPC solver with an ellipsoidal terminal set"};
  app.require_subcommand(1);

  std::string file, out_path, x0_text;
  std::size_t steps = 50;
  std::vector<std::size_t> horizons{10, 20, 40};
  std::size_t bench_iters = 200, repeats = 5;
  unsigned seed = 0;
  SolveFlags flags;

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a problem file");
  validate_cmd->add_option("file", file, "problem JSON")->required();

  CLI::App* terminal_cmd =
      app.add_subcommand("terminal", "build terminal ingredients for a problem file");
  terminal_cmd->add_option("file", file, "problem JSON (terminal keys optional)")->required();
  terminal_cmd->add_option("--out", out_path, "write the fragment here instead of stdout");

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one MPC instance");
  solve_cmd->add_option("file", file, "problem JSON")->required();
  solve_cmd->add_option("--x0", x0_text, "current state, comma separated (default origin)");
  solve_cmd->add_option("--out", out_path, "write the result here instead of stdout");
  add_solve_flags(solve_cmd, flags, false);

  CLI::App* sim_cmd = app.add_subcommand("simulate", "closed-loop simulation");
  sim_cmd->add_option("file", file, "problem JSON")->required();
  sim_cmd->add_option("--steps", steps, "number of sample times");
  sim_cmd->add_option("--x0", x0_text, "initial state, comma separated (default origin)");
  sim_cmd->add_option("--out", out_path, "CSV log path")->required();
  add_solve_flags(sim_cmd, flags, true);

  CLI::App* bench_cmd = app.add_subcommand("bench", "horizon scaling benchmark");
  bench_cmd->add_option("file", file, "problem JSON")->required();
  bench_cmd->add_option("--horizons", horizons, "horizons to benchmark")->delimiter(',');
  bench_cmd->add_option("--iters", bench_iters, "iterations per run");
  bench_cmd->add_option("--repeats", repeats, "runs per horizon (median reported)");
  bench_cmd->add_option("--seed", seed, "seed for the benchmark start state");
  bench_cmd->add_option("--out", out_path, "write the table here instead of stdout");
  add_solve_flags(bench_cmd, flags, false);

  CLI::App* case_cmd =
      app.add_subcommand("casestudy", "emit the three-mass benchmark problem file");
  case_cmd->add_option("--out", out_path, "problem JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return cmd_validate(file);
    if (terminal_cmd->parsed()) return cmd_terminal(file, out_path);
    if (solve_cmd->parsed()) return cmd_solve(file, x0_text, flags, out_path);
    if (sim_cmd->parsed()) return cmd_simulate(file, steps, x0_text, flags, out_path);
    if (bench_cmd->parsed())
      return cmd_bench(file, horizons, bench_iters, repeats, seed, flags, out_path);
    if (case_cmd->parsed()) return cmd_casestudy(out_path);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
