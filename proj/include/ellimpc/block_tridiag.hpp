#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ellimpc/factorization.hpp"
#include "ellimpc/matrix.hpp"

namespace ellimpc {

/// Upper Cholesky factor of a symmetric positive definite block-tridiagonal
/// matrix W, stored as its only nonzero blocks: N upper-triangular diagonal
/// blocks (beta) and N-1 superdiagonal blocks (alpha). No index arrays are
/// needed; memory grows linearly with the number of block rows.
struct BlockTridiagCholesky {
  std::vector<Matrix> beta;   // beta[i] upper-triangular, i = 0..N-1
  std::vector<Matrix> alpha;  // alpha[i] couples block rows i and i+1

  std::size_t block_rows() const noexcept { return beta.size(); }
  std::size_t block_dim() const noexcept { return beta.empty() ? 0 : beta.front().rows(); }

  /// Counts of block-level operations done by solve(); the totals are an
  /// affine function of the number of block rows.
  struct OpCount {
    std::size_t triangular_solves = 0;
    std::size_t block_matvecs = 0;
  };

  /// Solve W x = rhs with W = beta/alpha reconstructed, by forward
  /// substitution on the transposed factor and backward substitution on the
  /// factor itself. Touches each stored block once per pass.
  Vector solve(std::span<const double> rhs, OpCount* ops = nullptr) const {
    const std::size_t nb = block_rows();
    const std::size_t n = block_dim();
    assert(rhs.size() == nb * n);
    Vector work(n);
    Vector x(rhs.begin(), rhs.end());

    // forward pass: factor' * y = rhs, overwriting x with y
    for (std::size_t i = 0; i < nb; ++i) {
      std::span<double> xi(x.data() + i * n, n);
      if (i > 0) {
        // subtract alpha[i-1]' * y_{i-1}
        const Vector prev(x.data() + (i - 1) * n, x.data() + i * n);
        const Vector coupled = mul_transpose(alpha[i - 1], prev);
        for (std::size_t k = 0; k < n; ++k) xi[k] -= coupled[k];
        if (ops) ++ops->block_matvecs;
      }
      const Vector yi = solve_upper_transposed(beta[i], xi);
      for (std::size_t k = 0; k < n; ++k) xi[k] = yi[k];
      if (ops) ++ops->triangular_solves;
    }

    // backward pass: factor * x = y
    for (std::size_t ii = nb; ii-- > 0;) {
      std::span<double> xi(x.data() + ii * n, n);
      if (ii + 1 < nb) {
        const Vector next(x.data() + (ii + 1) * n, x.data() + (ii + 2) * n);
        const Vector coupled = alpha[ii] * next;
        for (std::size_t k = 0; k < n; ++k) xi[k] -= coupled[k];
        if (ops) ++ops->block_matvecs;
      }
      const Vector zi = solve_upper(beta[ii], xi);
      for (std::size_t k = 0; k < n; ++k) xi[k] = zi[k];
      if (ops) ++ops->triangular_solves;
    }
    return x;
  }
};

/// Factor a symmetric positive definite block-tridiagonal matrix given its
/// diagonal blocks and superdiagonal blocks. Blockwise recursion:
///   beta[0]' beta[0] = D[0]
///   alpha[i] = beta[i]^{-T} O[i]
///   beta[i+1]' beta[i+1] = D[i+1] - alpha[i]' alpha[i]
inline BlockTridiagCholesky block_tridiag_cholesky(std::vector<Matrix> diag,
                                                   const std::vector<Matrix>& offdiag,
                                                   double pivot_floor = 1e-14) {
  assert(!diag.empty() && offdiag.size() + 1 == diag.size());
  const std::size_t nb = diag.size();
  const std::size_t n = diag.front().rows();

  BlockTridiagCholesky f;
  f.beta.reserve(nb);
  f.alpha.reserve(nb - 1);

  f.beta.push_back(cholesky(diag[0], pivot_floor));
  for (std::size_t i = 0; i + 1 < nb; ++i) {
    // alpha[i]: solve beta[i]' X = offdiag[i] column by column
    Matrix a(n, n);
    Vector col(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) col[k] = offdiag[i](k, j);
      const Vector x = solve_upper_transposed(f.beta[i], col);
      for (std::size_t k = 0; k < n; ++k) a(k, j) = x[k];
    }
    // Schur update of the next diagonal block
    Matrix& next = diag[i + 1];
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += a(k, r) * a(k, c);
        next(r, c) -= acc;
      }
    f.alpha.push_back(std::move(a));
    f.beta.push_back(cholesky(next, pivot_floor));
  }
  return f;
}

/// Reassemble the dense matrix factor' * factor. Test and validation helper;
/// the solver itself never materializes it.
inline Matrix reconstruct_block_tridiag(const BlockTridiagCholesky& f) {
  const std::size_t nb = f.block_rows();
  const std::size_t n = f.block_dim();
  Matrix wc(nb * n, nb * n);
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        wc(i * n + r, i * n + c) = f.beta[i](r, c);
        if (i + 1 < nb) wc(i * n + r, (i + 1) * n + c) = f.alpha[i](r, c);
      }
    }
  }
  return wc.transposed() * wc;
}

}  // namespace ellimpc
