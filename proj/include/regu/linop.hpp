#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regu {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a vector length or operator shape does not match.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation needs A^T but the operator only provides A.
class AdjointUnavailable : public std::logic_error {
public:
  AdjointUnavailable()
      : std::logic_error("operator has no adjoint: transpose-free methods only") {}
};

void check_length(const Vector& v, Index expected, const char* what);

// ---------------------------------------------------------------------------
// Compressed sparse rows
// ---------------------------------------------------------------------------

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// a row and row_offsets has rows + 1 entries.
struct SparseMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> column_indices;
  std::vector<double> values;

  /// Duplicate entries are summed.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(const Vector& d);
  static SparseMatrix from_dense(const Matrix& a, double drop_tol = 0.0);

  Index nnz() const { return row_offsets.back(); }
  Index row_nnz(Index i) const { return row_offsets[i + 1] - row_offsets[i]; }

  Vector multiply(const Vector& x) const;
  Vector multiply_transposed(const Vector& y) const;
  SparseMatrix transposed() const;
  Matrix to_dense() const;

  /// Throws std::logic_error if the CSR invariants are violated.
  void validate() const;
};

/// diag(d) * S
SparseMatrix scale_rows(const Vector& d, const SparseMatrix& s);
/// [top; bottom]
SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom);
/// Sparse product a * b.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);
/// kron(a, b) for sparse factors.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

enum class OperatorKind {
  identity,
  dense,
  sparse_csr,
  kronecker,
  convolution,
  stacked,
  priorconditioned,
  functional,
};

const char* to_string(OperatorKind kind);

/// Matrix-free linear map R^N -> R^M.
///
/// Operators are immutable after construction; apply and apply_adjoint are
/// const and may be called concurrently.
class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::pair<Index, Index> size() const { return {rows_, cols_}; }

  virtual OperatorKind kind() const = 0;
  virtual bool has_adjoint() const { return true; }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;

  /// Explicit row storage for row-action methods; empty for matrix-free kinds.
  virtual std::optional<SparseMatrix> explicit_rows() const { return std::nullopt; }

protected:
  LinearOperator(Index rows, Index cols);

  virtual void apply_impl(const Vector& x, Vector& y) const = 0;
  virtual void apply_adjoint_impl(const Vector& y, Vector& x) const;

private:
  Index rows_;
  Index cols_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(Index n);
  OperatorKind kind() const override { return OperatorKind::identity; }
  std::optional<SparseMatrix> explicit_rows() const override;

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
};

class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(Matrix a);
  OperatorKind kind() const override { return OperatorKind::dense; }
  std::optional<SparseMatrix> explicit_rows() const override;
  const Matrix& matrix() const { return a_; }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  Matrix a_;
};

class SparseOperator final : public LinearOperator {
public:
  explicit SparseOperator(SparseMatrix a);
  OperatorKind kind() const override { return OperatorKind::sparse_csr; }
  std::optional<SparseMatrix> explicit_rows() const override { return a_; }
  const SparseMatrix& matrix() const { return a_; }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  SparseMatrix a_;
};

/// A = left ⊗ right. With x = vec(X), X of size right.cols() x left.cols()
/// (column-major), apply(x) = vec(right * X * left^T).
class KroneckerOperator final : public LinearOperator {
public:
  KroneckerOperator(Matrix left, Matrix right);
  OperatorKind kind() const override { return OperatorKind::kronecker; }
  const Matrix& left_factor() const { return left_; }
  const Matrix& right_factor() const { return right_; }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  Matrix left_;
  Matrix right_;
};

/// [top; scale * bottom]
class StackedOperator final : public LinearOperator {
public:
  StackedOperator(OperatorPtr top, OperatorPtr bottom, double scale);
  OperatorKind kind() const override { return OperatorKind::stacked; }
  bool has_adjoint() const override;
  const LinearOperator& top() const { return *top_; }
  const LinearOperator& bottom() const { return *bottom_; }
  double scale() const { return scale_; }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  OperatorPtr top_;
  OperatorPtr bottom_;
  double scale_;
};

/// Operator defined by user callbacks. The adjoint is optional.
class FunctionalOperator final : public LinearOperator {
public:
  using Map = std::function<Vector(const Vector&)>;

  FunctionalOperator(Index rows, Index cols, Map forward, Map adjoint = {});
  OperatorKind kind() const override { return OperatorKind::functional; }
  bool has_adjoint() const override { return static_cast<bool>(adjoint_); }

private:
  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  Map forward_;
  Map adjoint_;
};

enum class Boundary { zero, periodic, reflective };

const char* to_string(Boundary bc);
Boundary boundary_from_string(const std::string& name);

/// Spatially invariant 2D convolution on an image of size rows x cols.
///
/// The image is extended beyond its borders according to the boundary
/// condition, convolved with the PSF and cropped back to rows x cols.
/// `center` is the PSF pixel that maps an image pixel onto itself.
/// The adjoint is the exact transpose (correlation with the same extension).
class ConvolutionOperator final : public LinearOperator {
public:
  ConvolutionOperator(const Matrix& psf, std::pair<Index, Index> center, Index image_rows,
                      Index image_cols, Boundary bc);
  OperatorKind kind() const override { return OperatorKind::convolution; }
  Boundary boundary() const { return bc_; }
  Index image_rows() const { return image_rows_; }
  Index image_cols() const { return image_cols_; }
  /// Largest tap offset from the PSF center, in pixels.
  Index half_width() const { return half_width_; }

private:
  struct Tap {
    Index dr;
    Index dc;
    double weight;
  };

  void apply_impl(const Vector& x, Vector& y) const override;
  void apply_adjoint_impl(const Vector& y, Vector& x) const override;
  void index_map(Index offset, Index n, std::vector<Index>& map) const;

  std::vector<Tap> taps_;
  Index image_rows_;
  Index image_cols_;
  Index half_width_ = 0;
  Boundary bc_;
};

/// Maps a possibly out-of-range pixel index into [0, n) according to the
/// boundary condition; -1 means the extension is zero there.
Index extend_index(Index i, Index n, Boundary bc);

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

OperatorPtr make_identity(Index n);
OperatorPtr make_dense(Matrix a);
OperatorPtr make_sparse(SparseMatrix a);

/// Builds [top; lambda * bottom], the operator of the Tikhonov least squares
/// problem min ||[A; lambda L] x - [b; 0]||.
OperatorPtr stack_vertical(OperatorPtr top, OperatorPtr bottom, double lambda);

inline std::pair<Index, Index> size_of(const LinearOperator& op) { return op.size(); }

/// max over seeded random (x, y) of |<Ax, y> - <x, A^T y>| / (||Ax|| ||y||).
double adjoint_consistency_test(const LinearOperator& op, int trials, std::uint64_t seed);

/// Assembles the explicit M x N matrix by applying the operator to unit
/// vectors. Refuses operators with M*N above max_entries.
Matrix densify(const LinearOperator& op, Index max_entries = 4'000'000);

/// Same as densify but applies A^T to unit vectors; returns the M x N matrix.
Matrix densify_adjoint(const LinearOperator& op, Index max_entries = 4'000'000);

}  // namespace regu
