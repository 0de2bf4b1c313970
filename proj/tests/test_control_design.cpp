#include <catch2/catch.hpp>

#include <random>

#include "ellimpc/control_design.hpp"
#include "ellimpc/discretize.hpp"
#include "support/oracles.hpp"
#include "support/test_utils.hpp"

using namespace ellimpc;

TEST_CASE("zoh of zero dynamics integrates the input") {
  const DiscreteModel d = zoh_discretize(Matrix(2, 2), Matrix::identity(2), 0.2);
  REQUIRE(max_abs(d.A - Matrix::identity(2)) <= 1e-15);
  REQUIRE(max_abs(d.B - 0.2 * Matrix::identity(2)) <= 1e-15);
}

TEST_CASE("zoh of the double integrator has the closed form") {
  const Matrix a_c(2, 2, {0.0, 1.0, 0.0, 0.0});
  const Matrix b_c(2, 1, {0.0, 1.0});
  const DiscreteModel d = zoh_discretize(a_c, b_c, 0.2);
  CHECK(d.A(0, 0) == Approx(1.0));
  CHECK(d.A(0, 1) == Approx(0.2));
  CHECK(d.A(1, 0) == 0.0);
  CHECK(d.A(1, 1) == Approx(1.0));
  CHECK(d.B(0, 0) == Approx(0.02));
  CHECK(d.B(1, 0) == Approx(0.2));
}

TEST_CASE("zoh matches a truncated-series reference on random dynamics") {
  std::mt19937 rng(53);
  const Matrix a_c = testutil::random_matrix(rng, 4, 4);
  const Matrix b_c = testutil::random_matrix(rng, 4, 2);
  const DiscreteModel fast = zoh_discretize(a_c, b_c, 0.2);
  const DiscreteModel slow = testutil::taylor_zoh(a_c, b_c, 0.2);
  REQUIRE(max_abs(fast.A - slow.A) <= 1e-10 * std::max(1.0, max_abs(slow.A)));
  REQUIRE(max_abs(fast.B - slow.B) <= 1e-10 * std::max(1.0, max_abs(slow.B)));
}

TEST_CASE("spectral radius estimate agrees with power iteration") {
  std::mt19937 rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = testutil::random_matrix(rng, 5, 5);
    const double fast = spectral_radius_estimate(a);
    const double slow = testutil::power_iteration_radius(a);
    REQUIRE(fast == Approx(slow).epsilon(1e-3));
  }
}

TEST_CASE("lyapunov solution for zero dynamics is the right-hand side") {
  std::mt19937 rng(61);
  const Matrix q = testutil::random_spd(rng, 3);
  const Matrix t = solve_discrete_lyapunov(Matrix(3, 3), q);
  REQUIRE(max_abs(t - q) <= 1e-14 * max_abs(q) * 10);
}

TEST_CASE("scalar lyapunov has the geometric-series value") {
  const Matrix t = solve_discrete_lyapunov(Matrix(1, 1, {0.5}), Matrix(1, 1, {1.0}));
  REQUIRE(t(0, 0) == Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("lyapunov residual vanishes on random stable dynamics") {
  std::mt19937 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = testutil::random_stable(rng, 4, 0.85);
    const Matrix m = testutil::random_spd(rng, 4);
    const Matrix t = solve_discrete_lyapunov(a, m);
    const Matrix residual = a.transposed() * (t * a) - t + m;
    REQUIRE(max_abs(residual) <= 1e-9 * max_abs(m));
    REQUIRE(symmetry_error(t) <= 1e-12 * max_abs(t));
  }
}

TEST_CASE("lyapunov rejects unstable dynamics") {
  REQUIRE_THROWS_AS(solve_discrete_lyapunov(Matrix(1, 1, {1.01}), Matrix::identity(1)),
                    NotStable);
}

TEST_CASE("lqr gain for zero dynamics is zero") {
  const Matrix k =
      riccati_lqr(Matrix(2, 2), Matrix::identity(2), Matrix::identity(2), Matrix::identity(2));
  REQUIRE(max_abs(k) <= 1e-14);
}

TEST_CASE("scalar lqr stabilizes an integrator") {
  const Matrix k = riccati_lqr(Matrix(1, 1, {1.0}), Matrix(1, 1, {1.0}),
                               Matrix(1, 1, {1.0}), Matrix(1, 1, {1.0}));
  REQUIRE(std::abs(1.0 + k(0, 0)) < 1.0);
}

TEST_CASE("lqr reports non-convergence for an uncontrollable unstable pair") {
  LqrOptions opts;
  opts.max_iterations = 500;
  REQUIRE_THROWS_AS(riccati_lqr(Matrix(1, 1, {2.0}), Matrix(1, 1, {0.0}),
                                Matrix(1, 1, {1.0}), Matrix(1, 1, {1.0}), opts),
                    NoConvergence);
}

TEST_CASE("lqr closed loop is stable on random controllable systems") {
  std::mt19937 rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = testutil::random_matrix(rng, 4, 4);
    const Matrix b = testutil::random_matrix(rng, 4, 2);
    const Matrix q = testutil::random_spd(rng, 4);
    const Matrix r = testutil::random_spd(rng, 2);
    const Matrix k = riccati_lqr(a, b, q, r);
    const Matrix a_cl = a + b * k;
    REQUIRE(testutil::power_iteration_radius(a_cl) < 1.0);
  }
}
