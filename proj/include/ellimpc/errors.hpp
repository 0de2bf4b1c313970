#pragma once

#include <stdexcept>
#include <string>

namespace ellimpc {

/// A factorization hit a pivot or eigenvalue at or below its floor.
struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A closed-loop matrix has spectral radius at or above one.
struct NotStable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative computation exhausted its iteration budget.
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No contraction factor in the search grid yields an invariant set.
struct NoInvariantSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A constraint row leaves no room around the reference point.
struct DegenerateConstraint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyLog : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed problem file or offline cache.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ellimpc
