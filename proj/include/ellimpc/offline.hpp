#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ellimpc/block_tridiag.hpp"
#include "ellimpc/errors.hpp"
#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"
#include "ellimpc/problem.hpp"

namespace ellimpc {

/// Offsets into the stacked decision vector
///   z = (u_0, x_1, u_1, ..., x_{N-1}, u_{N-1}, x_N).
/// The head covers everything up to u_{N-1}; the terminal state sits last.
struct StackLayout {
  std::size_t n = 0, m = 0, horizon = 0;

  std::size_t dim() const noexcept { return horizon * (n + m); }
  std::size_t head_dim() const noexcept { return horizon * m + (horizon - 1) * n; }
  std::size_t u_offset(std::size_t i) const noexcept { return i * (n + m); }
  /// valid for i in 1..N; x_offset(N) is the terminal block
  std::size_t x_offset(std::size_t i) const noexcept { return (i - 1) * (n + m) + m; }
  std::size_t terminal_offset() const noexcept { return head_dim(); }
};

/// Penalty-dependent precomputation shared by every online solve. The
/// equality-constraint matrix is never stored; its products are formed from
/// A and B block row by block row, and the dual-system factor keeps only its
/// banded blocks, so the total footprint is an affine function of the
/// horizon.
struct OfflineData {
  double rho = 0.0;
  std::size_t n = 0, m = 0, horizon = 0;
  bool diagonal_costs = false;

  // distinct diagonal blocks of (H + rho * diag(I, ..., I, P))^{-1}
  Matrix Su_inv;       // (R + rho I)^{-1}, dense path
  Matrix Sx_inv;       // (Q + rho I)^{-1}, dense path
  Vector Su_inv_diag;  // componentwise path when R is diagonal
  Vector Sx_inv_diag;  // componentwise path when Q is diagonal
  Matrix Sf_inv;       // (T + rho P)^{-1}

  BlockTridiagCholesky Wc;  // factor of the dual system matrix

  Matrix P_half, P_invhalf;
  Matrix A, B;
  Matrix rhoP;

  StackLayout layout() const noexcept { return {n, m, horizon}; }

  /// Number of doubles the online iteration needs in memory.
  std::size_t stored_float_count() const {
    std::size_t count = 1;  // rho
    count += diagonal_costs ? Su_inv_diag.size() : Su_inv.data().size();
    count += diagonal_costs ? Sx_inv_diag.size() : Sx_inv.data().size();
    count += Sf_inv.data().size();
    for (const Matrix& b : Wc.beta) count += b.data().size();
    for (const Matrix& a : Wc.alpha) count += a.data().size();
    count += P_half.data().size() + P_invhalf.data().size();
    count += A.data().size() + B.data().size() + rhoP.data().size();
    return count;
  }
};

/// (G w) for z-shaped w, formed from A and B without storing G.
inline Vector apply_dynamics(const OfflineData& off, std::span<const double> w) {
  const StackLayout lay = off.layout();
  assert(w.size() == lay.dim());
  Vector out(off.horizon * off.n);
  for (std::size_t i = 0; i < off.horizon; ++i) {
    std::span<const double> u(w.data() + lay.u_offset(i), off.m);
    const Vector bu = off.B * u;
    std::span<const double> x_next(w.data() + lay.x_offset(i + 1), off.n);
    for (std::size_t k = 0; k < off.n; ++k) out[i * off.n + k] = bu[k] - x_next[k];
    if (i > 0) {
      std::span<const double> x(w.data() + lay.x_offset(i), off.n);
      const Vector ax = off.A * x;
      for (std::size_t k = 0; k < off.n; ++k) out[i * off.n + k] += ax[k];
    }
  }
  return out;
}

/// (G' mu) for a multiplier stacked in N blocks of n.
inline Vector apply_dynamics_transpose(const OfflineData& off, std::span<const double> mu) {
  const StackLayout lay = off.layout();
  assert(mu.size() == off.horizon * off.n);
  Vector out(lay.dim(), 0.0);
  for (std::size_t i = 0; i < off.horizon; ++i) {
    std::span<const double> mu_i(mu.data() + i * off.n, off.n);
    const Vector btmu = mul_transpose(off.B, mu_i);
    for (std::size_t k = 0; k < off.m; ++k) out[lay.u_offset(i) + k] = btmu[k];
    if (i > 0) {
      const Vector atmu = mul_transpose(off.A, mu_i);
      for (std::size_t k = 0; k < off.n; ++k) out[lay.x_offset(i) + k] += atmu[k];
    }
    for (std::size_t k = 0; k < off.n; ++k) out[lay.x_offset(i + 1) + k] -= mu_i[k];
  }
  return out;
}

/// Blockwise product with the inverse of the augmented cost diagonal.
/// Componentwise when the diagonal fast path is active.
inline Vector apply_cost_inverse(const OfflineData& off, std::span<const double> w) {
  const StackLayout lay = off.layout();
  assert(w.size() == lay.dim());
  Vector out(lay.dim());
  for (std::size_t i = 0; i < off.horizon; ++i) {
    std::span<const double> u(w.data() + lay.u_offset(i), off.m);
    if (off.diagonal_costs) {
      for (std::size_t k = 0; k < off.m; ++k)
        out[lay.u_offset(i) + k] = off.Su_inv_diag[k] * u[k];
    } else {
      const Vector su = off.Su_inv * u;
      for (std::size_t k = 0; k < off.m; ++k) out[lay.u_offset(i) + k] = su[k];
    }
    if (i + 1 < off.horizon) {
      std::span<const double> x(w.data() + lay.x_offset(i + 1), off.n);
      if (off.diagonal_costs) {
        for (std::size_t k = 0; k < off.n; ++k)
          out[lay.x_offset(i + 1) + k] = off.Sx_inv_diag[k] * x[k];
      } else {
        const Vector sx = off.Sx_inv * x;
        for (std::size_t k = 0; k < off.n; ++k) out[lay.x_offset(i + 1) + k] = sx[k];
      }
    }
  }
  std::span<const double> xf(w.data() + lay.terminal_offset(), off.n);
  const Vector sf = off.Sf_inv * xf;
  for (std::size_t k = 0; k < off.n; ++k) out[lay.terminal_offset() + k] = sf[k];
  return out;
}

/// Build the offline data for a validated problem and a fixed penalty.
/// The dual system matrix W = G Hhat^{-1} G' is assembled only through its
/// block-tridiagonal nonzeros and factored in place; nothing of size
/// (N n) x (N n) is ever materialized.
inline OfflineData build_offline(const MPCProblem& p, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("build_offline: rho must be positive");
  const std::size_t n = p.state_dim();
  const std::size_t m = p.input_dim();

  OfflineData off;
  off.rho = rho;
  off.n = n;
  off.m = m;
  off.horizon = p.horizon;
  off.diagonal_costs = p.costs_are_diagonal();
  if (p.diagonal_costs.value_or(false)) {
    auto is_diag = [](const Matrix& mat) {
      for (std::size_t i = 0; i < mat.rows(); ++i)
        for (std::size_t j = 0; j < mat.cols(); ++j)
          if (i != j && mat(i, j) != 0.0) return false;
      return true;
    };
    if (!is_diag(p.Q) || !is_diag(p.R))
      throw std::invalid_argument("build_offline: diagonal cost path forced but Q or R is dense");
  }

  Matrix r_aug = p.R;
  for (std::size_t i = 0; i < m; ++i) r_aug(i, i) += rho;
  Matrix q_aug = p.Q;
  for (std::size_t i = 0; i < n; ++i) q_aug(i, i) += rho;

  Matrix su_dense = inverse_spd(r_aug);
  Matrix sx_dense = inverse_spd(q_aug);
  if (off.diagonal_costs) {
    off.Su_inv_diag.resize(m);
    for (std::size_t i = 0; i < m; ++i) off.Su_inv_diag[i] = 1.0 / r_aug(i, i);
    off.Sx_inv_diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) off.Sx_inv_diag[i] = 1.0 / q_aug(i, i);
    // keep the dense assembly consistent with the online componentwise path
    su_dense = Matrix::diagonal(off.Su_inv_diag);
    sx_dense = Matrix::diagonal(off.Sx_inv_diag);
  } else {
    off.Su_inv = su_dense;
    off.Sx_inv = sx_dense;
  }

  off.rhoP = rho * p.terminal.P;
  off.Sf_inv = inverse_spd(symmetrized(p.T + off.rhoP));

  const SymmetricSqrt root = symmetric_sqrt(p.terminal.P);
  off.P_half = root.half;
  off.P_invhalf = root.inv_half;
  off.A = p.A;
  off.B = p.B;

  // block-tridiagonal nonzeros of W
  const Matrix bsb = symmetrized(p.B * (su_dense * p.B.transposed()));
  const Matrix asa = symmetrized(p.A * (sx_dense * p.A.transposed()));
  const Matrix coupling = (-1.0) * (sx_dense * p.A.transposed());

  std::vector<Matrix> diag_blocks;
  diag_blocks.reserve(p.horizon);
  diag_blocks.push_back(symmetrized(bsb + sx_dense));
  for (std::size_t i = 1; i + 1 < p.horizon; ++i)
    diag_blocks.push_back(symmetrized(asa + bsb + sx_dense));
  diag_blocks.push_back(symmetrized(asa + bsb + off.Sf_inv));

  std::vector<Matrix> off_blocks(p.horizon - 1, coupling);
  off.Wc = block_tridiag_cholesky(std::move(diag_blocks), off_blocks);
  return off;
}

// ---------------------------------------------------------------------------
// Binary cache. Layout: magic "ELMP", version, dimensions and flags, then the
// payload as little-endian 64-bit floats in field order. The penalty is
// written as a length-prefixed array so a per-block diagonal extension keeps
// the same framing.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void put_matrix(std::ostream& os, const Matrix& m) {
  for (double v : m.data()) put_f64(os, v);
}

inline Matrix get_matrix(std::istream& is, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = get_f64(is);
  return m;
}

}  // namespace detail

inline constexpr std::uint32_t kOfflineCacheVersion = 1;

inline void save_offline(const OfflineData& off, std::ostream& os) {
  os.write("ELMP", 4);
  detail::put_u32(os, kOfflineCacheVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(off.n));
  detail::put_u32(os, static_cast<std::uint32_t>(off.m));
  detail::put_u32(os, static_cast<std::uint32_t>(off.horizon));
  detail::put_u32(os, off.diagonal_costs ? 1 : 0);
  detail::put_u32(os, 1);  // penalty entries
  detail::put_f64(os, off.rho);
  if (off.diagonal_costs) {
    for (double v : off.Su_inv_diag) detail::put_f64(os, v);
    for (double v : off.Sx_inv_diag) detail::put_f64(os, v);
  } else {
    detail::put_matrix(os, off.Su_inv);
    detail::put_matrix(os, off.Sx_inv);
  }
  detail::put_matrix(os, off.Sf_inv);
  for (const Matrix& b : off.Wc.beta) detail::put_matrix(os, b);
  for (const Matrix& a : off.Wc.alpha) detail::put_matrix(os, a);
  detail::put_matrix(os, off.P_half);
  detail::put_matrix(os, off.P_invhalf);
  detail::put_matrix(os, off.A);
  detail::put_matrix(os, off.B);
  detail::put_matrix(os, off.rhoP);
  if (!os) throw ParseError("save_offline: write failure");
}

inline OfflineData load_offline(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "ELMP", 4) != 0)
    throw ParseError("load_offline: bad magic");
  if (detail::get_u32(is) != kOfflineCacheVersion)
    throw ParseError("load_offline: unsupported version");

  OfflineData off;
  off.n = detail::get_u32(is);
  off.m = detail::get_u32(is);
  off.horizon = detail::get_u32(is);
  off.diagonal_costs = detail::get_u32(is) != 0;
  const std::uint32_t rho_len = detail::get_u32(is);
  if (rho_len != 1) throw ParseError("load_offline: unsupported penalty layout");
  off.rho = detail::get_f64(is);

  const std::size_t n = off.n, m = off.m;
  if (off.diagonal_costs) {
    off.Su_inv_diag.resize(m);
    for (double& v : off.Su_inv_diag) v = detail::get_f64(is);
    off.Sx_inv_diag.resize(n);
    for (double& v : off.Sx_inv_diag) v = detail::get_f64(is);
  } else {
    off.Su_inv = detail::get_matrix(is, m, m);
    off.Sx_inv = detail::get_matrix(is, n, n);
  }
  off.Sf_inv = detail::get_matrix(is, n, n);
  off.Wc.beta.reserve(off.horizon);
  for (std::size_t i = 0; i < off.horizon; ++i)
    off.Wc.beta.push_back(detail::get_matrix(is, n, n));
  off.Wc.alpha.reserve(off.horizon - 1);
  for (std::size_t i = 0; i + 1 < off.horizon; ++i)
    off.Wc.alpha.push_back(detail::get_matrix(is, n, n));
  off.P_half = detail::get_matrix(is, n, n);
  off.P_invhalf = detail::get_matrix(is, n, n);
  off.A = detail::get_matrix(is, n, n);
  off.B = detail::get_matrix(is, n, m);
  off.rhoP = detail::get_matrix(is, n, n);
  if (!is) throw ParseError("load_offline: truncated payload");
  return off;
}

inline void save_offline(const OfflineData& off, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("save_offline: cannot open " + path.string());
  save_offline(off, os);
}

inline OfflineData load_offline(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("load_offline: cannot open " + path.string());
  return load_offline(is);
}

}  // namespace ellimpc
