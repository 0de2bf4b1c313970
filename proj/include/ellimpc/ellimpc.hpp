#pragma once

// Sparse operator-splitting solver for linear MPC with an ellipsoidal
// terminal set, plus terminal-set construction and a closed-loop simulation
// harness. Header-only; depends only on the standard library (the JSON I/O
// header additionally uses the vendored nlohmann/json).

#include "ellimpc/block_tridiag.hpp"
#include "ellimpc/control_design.hpp"
#include "ellimpc/dense_reference.hpp"
#include "ellimpc/discretize.hpp"
#include "ellimpc/ellipsoid.hpp"
#include "ellimpc/errors.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/kkt.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/offline.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/sim.hpp"
#include "ellimpc/solver.hpp"
#include "ellimpc/terminal.hpp"
