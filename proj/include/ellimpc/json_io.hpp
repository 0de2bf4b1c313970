#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellimpc/errors.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"
#include "ellimpc/terminal.hpp"

namespace ellimpc {

// Problem file schema: a single JSON object with keys
//   A, B, Q, R, T            matrices as row-major nested arrays
//   N                        horizon
//   x_lo, x_hi, u_lo, u_hi   one vector applied to every step, or one per step
//   P, c, r                  terminal ellipsoid
//   x_ref, u_ref             steady-state reference
// All numbers are 64-bit floats.

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ParseError("problem file: '" + key + "' must be a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols)
      throw ParseError("problem file: '" + key + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array()) throw ParseError("problem file: '" + key + "' must be an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

/// Either a single vector broadcast over `count` steps or one vector per step.
inline std::vector<Vector> bounds_from_json(const nlohmann::json& j, const std::string& key,
                                            std::size_t count) {
  if (!j.is_array() || j.empty())
    throw ParseError("problem file: '" + key + "' must be a non-empty array");
  if (j.front().is_number()) return std::vector<Vector>(count, vector_from_json(j, key));
  if (j.size() != count)
    throw ParseError("problem file: '" + key + "' must have one entry per step (" +
                     std::to_string(count) + ")");
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(vector_from_json(j[i], key));
  return out;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json bounds_to_json(const std::vector<Vector>& per_step) {
  const bool uniform = std::all_of(per_step.begin(), per_step.end(),
                                   [&](const Vector& v) { return v == per_step.front(); });
  if (uniform) return nlohmann::json(per_step.front());
  nlohmann::json out = nlohmann::json::array();
  for (const Vector& v : per_step) out.push_back(v);
  return out;
}

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError("problem file: missing key '" + key + "'");
  return *it;
}

}  // namespace detail

/// Parse a problem document. When `require_terminal` is unset the terminal
/// keys (P, c, r and the cost T) may be absent and placeholders are
/// installed, so a file can be completed later by the terminal-set builder.
inline MPCProblem problem_from_json(const nlohmann::json& j, bool require_terminal = true) {
  try {
    MPCProblem p;
    p.A = detail::matrix_from_json(detail::require(j, "A"), "A");
    p.B = detail::matrix_from_json(detail::require(j, "B"), "B");
    p.Q = detail::matrix_from_json(detail::require(j, "Q"), "Q");
    p.R = detail::matrix_from_json(detail::require(j, "R"), "R");
    p.horizon = detail::require(j, "N").get<std::size_t>();
    if (p.horizon < 2) throw ParseError("problem file: N must be at least 2");

    p.bounds.x_lo = detail::bounds_from_json(detail::require(j, "x_lo"), "x_lo", p.horizon - 1);
    p.bounds.x_hi = detail::bounds_from_json(detail::require(j, "x_hi"), "x_hi", p.horizon - 1);
    p.bounds.u_lo = detail::bounds_from_json(detail::require(j, "u_lo"), "u_lo", p.horizon);
    p.bounds.u_hi = detail::bounds_from_json(detail::require(j, "u_hi"), "u_hi", p.horizon);

    p.x_ref = detail::vector_from_json(detail::require(j, "x_ref"), "x_ref");
    p.u_ref = detail::vector_from_json(detail::require(j, "u_ref"), "u_ref");

    const bool has_terminal = j.contains("P") && j.contains("c") && j.contains("r");
    if (require_terminal || has_terminal) {
      p.T = detail::matrix_from_json(detail::require(j, "T"), "T");
      p.terminal.P = detail::matrix_from_json(detail::require(j, "P"), "P");
      p.terminal.c = detail::vector_from_json(detail::require(j, "c"), "c");
      p.terminal.r = detail::require(j, "r").get<double>();
    } else {
      const std::size_t n = p.state_dim();
      p.T = j.contains("T") ? detail::matrix_from_json(j["T"], "T") : Matrix::identity(n);
      p.terminal = Ellipsoid{Matrix::identity(n), p.x_ref, 1.0};
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
}

inline nlohmann::json problem_to_json(const MPCProblem& p) {
  nlohmann::json j;
  j["A"] = detail::matrix_to_json(p.A);
  j["B"] = detail::matrix_to_json(p.B);
  j["Q"] = detail::matrix_to_json(p.Q);
  j["R"] = detail::matrix_to_json(p.R);
  j["T"] = detail::matrix_to_json(p.T);
  j["N"] = p.horizon;
  j["x_lo"] = detail::bounds_to_json(p.bounds.x_lo);
  j["x_hi"] = detail::bounds_to_json(p.bounds.x_hi);
  j["u_lo"] = detail::bounds_to_json(p.bounds.u_lo);
  j["u_hi"] = detail::bounds_to_json(p.bounds.u_hi);
  j["P"] = detail::matrix_to_json(p.terminal.P);
  j["c"] = p.terminal.c;
  j["r"] = p.terminal.r;
  j["x_ref"] = p.x_ref;
  j["u_ref"] = p.u_ref;
  return j;
}

/// Terminal ingredients as a fragment mergeable into a problem document.
inline nlohmann::json terminal_to_json(const TerminalIngredients& ti) {
  nlohmann::json j;
  j["P"] = detail::matrix_to_json(ti.set.P);
  j["c"] = ti.set.c;
  j["r"] = ti.set.r;
  j["T"] = detail::matrix_to_json(ti.T);
  j["K"] = detail::matrix_to_json(ti.K);
  j["lambda"] = ti.lambda;
  return j;
}

inline MPCProblem load_problem(const std::filesystem::path& path, bool require_terminal = true) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open problem file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("problem file " + path.string() + ": " + e.what());
  }
  return problem_from_json(j, require_terminal);
}

inline void save_problem(const MPCProblem& p, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open output file " + path.string());
  os << problem_to_json(p).dump(2) << '\n';
}

}  // namespace ellimpc
