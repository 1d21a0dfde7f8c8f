#pragma once

#include "regu/linop.hpp"

#include <memory>
#include <optional>

namespace regu {

enum class RegMatrixKind { identity, laplacian1d, laplacian2d, tv_pair, user };

const char* to_string(RegMatrixKind kind);

/// A regularization matrix L together with the grid it was built for.
struct RegularizationMatrix {
  RegMatrixKind kind = RegMatrixKind::identity;
  SparseMatrix matrix;
  Index grid_rows = 0;
  Index grid_cols = 0;
};

enum class LaplacianDim { one_d, two_d };

/// Zero-boundary Laplacian: the (1, -2, 1) stencil for one_d (n x n), and
/// I⊗L1 + L1⊗I for two_d (n^2 x n^2). Both are symmetric and invertible.
RegularizationMatrix build_laplacian(LaplacianDim dim, Index n);

/// Forward differences on an n x n image stored column-major.
///
/// `dh` has one row per horizontally adjacent pixel pair, ordered
/// column-major over the n x (n-1) grid of left pixels; `dv` likewise over the
/// (n-1) x n grid of upper pixels. The aligned variants have n^2 rows, row p
/// holding the difference that starts at pixel p (a zero row where the
/// neighbour does not exist), so row p of both addresses the same pixel.
struct TvPair {
  Index n = 0;
  SparseMatrix dh;
  SparseMatrix dv;
  SparseMatrix dh_aligned;
  SparseMatrix dv_aligned;
};

TvPair build_tv_pair(Index n);

/// Isotropic discrete total variation of an n x n image:
/// sum over pixels of sqrt(gh^2 + gv^2) with forward differences.
double total_variation(const Vector& x, Index n);

/// Default reweighting floor: 1e-10 * max|v|, or 1 when v vanishes.
double relative_floor(const Vector& v);

/// diag(max(|x_i|, floor)^(-1/2)). Without an explicit floor the relative
/// default is used.
SparseMatrix irn_weights(const Vector& x, std::optional<double> floor = std::nullopt);

/// [W Dh; W Dv] on the aligned pair, W = diag(max(gh^2 + gv^2, floor^2)^(-1/4)).
/// Without an explicit floor it defaults to relative_floor of the gradient
/// magnitudes.
SparseMatrix htv_weights(const Vector& x, const TvPair& tv,
                         std::optional<double> floor = std::nullopt);

/// Diagonal entries of the htv weighting W (exposed for inspection).
Vector htv_weight_diagonal(const Vector& x, const TvPair& tv,
                           std::optional<double> floor = std::nullopt);

/// Factorization of a full-rank regularization matrix used to substitute
/// x = L^{-1} xi. Square L is LU-factored; a tall L is first reduced to the
/// square triangular factor of its thin QR decomposition, which has the same
/// norm ||L x||.
class Priorconditioner {
public:
  /// L = I of size n; solves are no-ops.
  static std::shared_ptr<const Priorconditioner> identity(Index n);
  static std::shared_ptr<const Priorconditioner> create(const SparseMatrix& l);
  static std::shared_ptr<const Priorconditioner> create(const RegularizationMatrix& l);

  Index size() const { return n_; }
  bool is_identity() const { return impl_ == nullptr; }

  /// L^{-1} v, or L^{-T} v when transposed.
  Vector solve(const Vector& v, bool transposed = false) const;
  /// L v with the effective square factor.
  Vector apply(const Vector& v) const;
  /// L^T v with the effective square factor.
  Vector apply_transposed(const Vector& v) const;

  struct Impl;

private:
  Priorconditioner(Index n, std::shared_ptr<const Impl> impl);
  Index n_;
  std::shared_ptr<const Impl> impl_;
};

using PriorconditionerPtr = std::shared_ptr<const Priorconditioner>;

Vector priorcondition_solve(const Priorconditioner& p, const Vector& v, bool transposed);

/// A L^{-1}; adjoint L^{-T} A^T.
class PriorconditionedOperator final : public LinearOperator {
public:
  PriorconditionedOperator(OperatorPtr a, PriorconditionerPtr p);
  OperatorKind kind() const override { return OperatorKind::priorconditioned; }
  bool has_adjoint() const override { return a_->has_adjoint(); }
  const Priorconditioner& priorconditioner() const { return *p_; }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  OperatorPtr a_;
  PriorconditionerPtr p_;
};

}  // namespace regu
