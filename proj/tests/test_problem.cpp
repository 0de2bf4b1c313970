#include <catch2/catch.hpp>

#include <random>
#include <sstream>

#include "ellimpc/json_io.hpp"
#include "ellimpc/offline.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/sim.hpp"
#include "ellimpc/solver.hpp"
#include "support/test_utils.hpp"

using namespace ellimpc;

namespace {

MPCProblem tiny_problem() {
  MPCProblem p;
  p.A = Matrix(1, 1, {0.5});
  p.B = Matrix(1, 1, {1.0});
  p.Q = Matrix(1, 1, {1.0});
  p.R = Matrix(1, 1, {1.0});
  p.T = Matrix(1, 1, {1.0});
  p.horizon = 3;
  p.bounds = StageBounds::uniform(Vector{-1.0}, Vector{1.0}, Vector{-1.0}, Vector{1.0}, 3);
  p.terminal = Ellipsoid{Matrix::identity(1), Vector{0.0}, 1.0};
  p.x_ref = {0.0};
  p.u_ref = {0.0};
  return p;
}

}  // namespace

TEST_CASE("the benchmark problem validates cleanly") {
  const MPCProblem p = build_case_study_problem();
  const auto issues = validate(p);
  for (const auto& issue : issues) INFO(issue.code << ": " << issue.message);
  REQUIRE(issues.empty());
}

TEST_CASE("degenerate bounds are reported with their step") {
  MPCProblem p = tiny_problem();
  p.horizon = 5;
  p.bounds = StageBounds::uniform(Vector{-1.0}, Vector{1.0}, Vector{-1.0}, Vector{1.0}, 5);
  p.bounds.x_lo[2] = Vector{1.0};  // equals the upper bound at step 3
  const auto issues = validate(p);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "bounds.x.order");
  CHECK(issues[0].step == 3);
}

TEST_CASE("a non-steady reference is rejected") {
  MPCProblem p = tiny_problem();
  p.B = Matrix(1, 1, {0.0});
  p.x_ref = {1.0};  // A x_ref = 0.5 != 1
  const auto issues = validate(p);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "reference.steady_state");
}

TEST_CASE("validate is pure and idempotent") {
  const MPCProblem p = tiny_problem();
  const auto first = validate(p);
  const auto second = validate(p);
  REQUIRE(first.empty());
  REQUIRE(second.empty());
}

TEST_CASE("random valid problems run through offline build and a solver step") {
  std::mt19937 rng(89);
  std::uniform_int_distribution<std::size_t> nd(1, 5), md(1, 3), hd(2, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const MPCProblem p = testutil::random_problem(rng, nd(rng), md(rng), hd(rng));
    REQUIRE(validate(p).empty());
    const OfflineData off = build_offline(p, 1.0);
    SolverSettings s;
    s.max_iter = 3;
    const Vector x0(p.state_dim(), 0.05);
    REQUIRE_NOTHROW(admm_solve(p, off, x0, s));
  }
}

TEST_CASE("problem json round trip preserves every field") {
  const MPCProblem p = build_case_study_problem();
  const nlohmann::json j = problem_to_json(p);
  const MPCProblem q = problem_from_json(j);
  CHECK(max_abs(p.A - q.A) == 0.0);
  CHECK(max_abs(p.B - q.B) == 0.0);
  CHECK(max_abs(p.Q - q.Q) == 0.0);
  CHECK(max_abs(p.R - q.R) == 0.0);
  CHECK(max_abs(p.T - q.T) == 0.0);
  CHECK(p.horizon == q.horizon);
  CHECK(p.bounds.x_lo == q.bounds.x_lo);
  CHECK(p.bounds.u_hi == q.bounds.u_hi);
  CHECK(max_abs(p.terminal.P - q.terminal.P) == 0.0);
  CHECK(p.terminal.c == q.terminal.c);
  CHECK(p.terminal.r == q.terminal.r);
  CHECK(p.x_ref == q.x_ref);
  CHECK(p.u_ref == q.u_ref);
}

TEST_CASE("bounds accept one vector for all steps or one per step") {
  nlohmann::json j = problem_to_json(tiny_problem());
  j["x_lo"] = {{-1.0}, {-2.0}};  // per-step, horizon 3 has two stage states
  j["x_hi"] = {1.0};             // broadcast
  const MPCProblem p = problem_from_json(j);
  CHECK(p.bounds.x_lo[0] == Vector{-1.0});
  CHECK(p.bounds.x_lo[1] == Vector{-2.0});
  CHECK(p.bounds.x_hi[0] == Vector{1.0});
  CHECK(p.bounds.x_hi[1] == Vector{1.0});
}

TEST_CASE("missing keys and ragged matrices raise ParseError") {
  nlohmann::json j = problem_to_json(tiny_problem());
  j.erase("Q");
  REQUIRE_THROWS_AS(problem_from_json(j), ParseError);

  nlohmann::json bad = problem_to_json(tiny_problem());
  bad["A"] = {{1.0, 2.0}, {3.0}};
  REQUIRE_THROWS_AS(problem_from_json(bad), ParseError);
}

TEST_CASE("terminal keys may be deferred when not required") {
  nlohmann::json j = problem_to_json(tiny_problem());
  j.erase("P");
  j.erase("c");
  j.erase("r");
  REQUIRE_THROWS_AS(problem_from_json(j), ParseError);
  const MPCProblem p = problem_from_json(j, /*require_terminal=*/false);
  CHECK(p.terminal.r == 1.0);
}
