#include "regu/linop.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace regu {

void check_length(const Vector& v, Index expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream msg;
    msg << what << ": expected length " << expected << ", got " << v.size();
    throw DimensionError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw DimensionError("sparse triplet out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix s;
  s.rows = rows;
  s.cols = cols;
  s.row_offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
  s.column_indices.reserve(triplets.size());
  s.values.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const Index r = triplets[k].row;
    const Index c = triplets[k].col;
    double v = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
      v += triplets[k].value;
      ++k;
    }
    s.column_indices.push_back(c);
    s.values.push_back(v);
    ++s.row_offsets[r + 1];
  }
  for (Index i = 0; i < rows; ++i) s.row_offsets[i + 1] += s.row_offsets[i];
  return s;
}

SparseMatrix SparseMatrix::identity(Index n) { return diagonal(Vector::Ones(n)); }

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
  SparseMatrix s;
  s.rows = s.cols = d.size();
  s.row_offsets.resize(static_cast<std::size_t>(d.size()) + 1);
  s.column_indices.resize(d.size());
  s.values.resize(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    s.row_offsets[i] = i;
    s.column_indices[i] = i;
    s.values[i] = d[i];
  }
  s.row_offsets[d.size()] = d.size();
  return s;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& a, double drop_tol) {
  std::vector<Triplet> t;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (std::abs(a(i, j)) > drop_tol) t.push_back({i, j, a(i, j)});
    }
  }
  return from_triplets(a.rows(), a.cols(), std::move(t));
}

Vector SparseMatrix::multiply(const Vector& x) const {
  check_length(x, cols, "sparse multiply");
  Vector y(rows);
  for (Index i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      acc += values[k] * x[column_indices[k]];
    }
    y[i] = acc;
  }
  return y;
}

Vector SparseMatrix::multiply_transposed(const Vector& y) const {
  check_length(y, rows, "sparse transposed multiply");
  Vector x = Vector::Zero(cols);
  for (Index i = 0; i < rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      x[column_indices[k]] += values[k] * yi;
    }
  }
  return x;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_offsets.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (Index c : column_indices) ++t.row_offsets[c + 1];
  for (Index j = 0; j < cols; ++j) t.row_offsets[j + 1] += t.row_offsets[j];
  t.column_indices.resize(column_indices.size());
  t.values.resize(values.size());
  std::vector<Index> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      const Index dst = next[column_indices[k]]++;
      t.column_indices[dst] = i;
      t.values[dst] = values[k];
    }
  }
  return t;
}

Matrix SparseMatrix::to_dense() const {
  Matrix a = Matrix::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      a(i, column_indices[k]) += values[k];
    }
  }
  return a;
}

void SparseMatrix::validate() const {
  if (static_cast<Index>(row_offsets.size()) != rows + 1 || row_offsets.front() != 0) {
    throw std::logic_error("CSR: malformed row offsets");
  }
  if (static_cast<Index>(column_indices.size()) != nnz() ||
      static_cast<Index>(values.size()) != nnz()) {
    throw std::logic_error("CSR: nnz does not match row_offsets[rows]");
  }
  for (Index i = 0; i < rows; ++i) {
    if (row_offsets[i + 1] < row_offsets[i]) throw std::logic_error("CSR: decreasing offsets");
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      if (column_indices[k] < 0 || column_indices[k] >= cols) {
        throw std::logic_error("CSR: column index out of range");
      }
      if (k > row_offsets[i] && column_indices[k] <= column_indices[k - 1]) {
        throw std::logic_error("CSR: column indices not strictly increasing");
      }
    }
  }
}

SparseMatrix scale_rows(const Vector& d, const SparseMatrix& s) {
  check_length(d, s.rows, "scale_rows");
  SparseMatrix out = s;
  for (Index i = 0; i < s.rows; ++i) {
    for (Index k = s.row_offsets[i]; k < s.row_offsets[i + 1]; ++k) out.values[k] *= d[i];
  }
  return out;
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
  if (top.cols != bottom.cols) throw DimensionError("vstack: column counts differ");
  SparseMatrix out;
  out.rows = top.rows + bottom.rows;
  out.cols = top.cols;
  out.row_offsets = top.row_offsets;
  const Index base = top.nnz();
  for (Index i = 1; i <= bottom.rows; ++i) out.row_offsets.push_back(base + bottom.row_offsets[i]);
  out.column_indices = top.column_indices;
  out.column_indices.insert(out.column_indices.end(), bottom.column_indices.begin(),
                            bottom.column_indices.end());
  out.values = top.values;
  out.values.insert(out.values.end(), bottom.values.begin(), bottom.values.end());
  return out;
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols != b.rows) throw DimensionError("sparse multiply: inner dimensions differ");
  std::vector<Triplet> t;
  for (Index i = 0; i < a.rows; ++i) {
    for (Index ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const Index j = a.column_indices[ka];
      for (Index kb = b.row_offsets[j]; kb < b.row_offsets[j + 1]; ++kb) {
        t.push_back({i, b.column_indices[kb], a.values[ka] * b.values[kb]});
      }
    }
  }
  return SparseMatrix::from_triplets(a.rows, b.cols, std::move(t));
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz() * b.nnz()));
  for (Index i = 0; i < a.rows; ++i) {
    for (Index ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      for (Index r = 0; r < b.rows; ++r) {
        for (Index kb = b.row_offsets[r]; kb < b.row_offsets[r + 1]; ++kb) {
          t.push_back({i * b.rows + r, a.column_indices[ka] * b.cols + b.column_indices[kb],
                       a.values[ka] * b.values[kb]});
        }
      }
    }
  }
  return SparseMatrix::from_triplets(a.rows * b.rows, a.cols * b.cols, std::move(t));
}

// ---------------------------------------------------------------------------
// LinearOperator
// ---------------------------------------------------------------------------

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::identity: return "identity";
    case OperatorKind::dense: return "dense";
    case OperatorKind::sparse_csr: return "sparse_csr";
    case OperatorKind::kronecker: return "kronecker";
    case OperatorKind::convolution: return "convolution";
    case OperatorKind::stacked: return "stacked";
    case OperatorKind::priorconditioned: return "priorconditioned";
    case OperatorKind::functional: return "functional";
  }
  return "unknown";
}

LinearOperator::LinearOperator(Index rows, Index cols) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) throw DimensionError("operator dimensions must be positive");
}

Vector LinearOperator::apply(const Vector& x) const {
  check_length(x, cols_, "apply");
  Vector y(rows_);
  apply_impl(x, y);
  return y;
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  if (!has_adjoint()) throw AdjointUnavailable();
  check_length(y, rows_, "apply_adjoint");
  Vector x(cols_);
  apply_adjoint_impl(y, x);
  return x;
}

void LinearOperator::apply_adjoint_impl(const Vector&, Vector&) const { throw AdjointUnavailable(); }

IdentityOperator::IdentityOperator(Index n) : LinearOperator(n, n) {}
void IdentityOperator::apply_impl(const Vector& x, Vector& y) const { y = x; }
void IdentityOperator::apply_adjoint_impl(const Vector& y, Vector& x) const { x = y; }
std::optional<SparseMatrix> IdentityOperator::explicit_rows() const {
  return SparseMatrix::identity(rows());
}

DenseOperator::DenseOperator(Matrix a) : LinearOperator(a.rows(), a.cols()), a_(std::move(a)) {}
void DenseOperator::apply_impl(const Vector& x, Vector& y) const { y.noalias() = a_ * x; }
void DenseOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  x.noalias() = a_.transpose() * y;
}
std::optional<SparseMatrix> DenseOperator::explicit_rows() const {
  return SparseMatrix::from_dense(a_);
}

SparseOperator::SparseOperator(SparseMatrix a)
    : LinearOperator(a.rows, a.cols), a_(std::move(a)) {
  a_.validate();
}
void SparseOperator::apply_impl(const Vector& x, Vector& y) const { y = a_.multiply(x); }
void SparseOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  x = a_.multiply_transposed(y);
}

KroneckerOperator::KroneckerOperator(Matrix left, Matrix right)
    : LinearOperator(left.rows() * right.rows(), left.cols() * right.cols()),
      left_(std::move(left)),
      right_(std::move(right)) {}

void KroneckerOperator::apply_impl(const Vector& x, Vector& y) const {
  Eigen::Map<const Matrix> X(x.data(), right_.cols(), left_.cols());
  Eigen::Map<Matrix> Y(y.data(), right_.rows(), left_.rows());
  Y.noalias() = right_ * X * left_.transpose();
}

void KroneckerOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  Eigen::Map<const Matrix> Y(y.data(), right_.rows(), left_.rows());
  Eigen::Map<Matrix> X(x.data(), right_.cols(), left_.cols());
  X.noalias() = right_.transpose() * Y * left_;
}

StackedOperator::StackedOperator(OperatorPtr top, OperatorPtr bottom, double scale)
    : LinearOperator(top->rows() + bottom->rows(), top->cols()),
      top_(std::move(top)),
      bottom_(std::move(bottom)),
      scale_(scale) {
  if (top_->cols() != bottom_->cols()) {
    std::ostringstream msg;
    msg << "stack_vertical: column mismatch (" << top_->cols() << " vs " << bottom_->cols()
        << ")";
    throw DimensionError(msg.str());
  }
}

bool StackedOperator::has_adjoint() const { return top_->has_adjoint() && bottom_->has_adjoint(); }

void StackedOperator::apply_impl(const Vector& x, Vector& y) const {
  y.head(top_->rows()) = top_->apply(x);
  if (scale_ == 0.0) {
    y.tail(bottom_->rows()).setZero();
  } else {
    y.tail(bottom_->rows()) = scale_ * bottom_->apply(x);
  }
}

void StackedOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  x = top_->apply_adjoint(y.head(top_->rows()));
  if (scale_ != 0.0) x += scale_ * bottom_->apply_adjoint(y.tail(bottom_->rows()));
}

FunctionalOperator::FunctionalOperator(Index rows, Index cols, Map forward, Map adjoint)
    : LinearOperator(rows, cols), forward_(std::move(forward)), adjoint_(std::move(adjoint)) {
  if (!forward_) throw std::invalid_argument("functional operator needs a forward map");
}

void FunctionalOperator::apply_impl(const Vector& x, Vector& y) const {
  y = forward_(x);
  check_length(y, rows(), "functional forward result");
}

void FunctionalOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  if (!adjoint_) throw AdjointUnavailable();
  x = adjoint_(y);
  check_length(x, cols(), "functional adjoint result");
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

const char* to_string(Boundary bc) {
  switch (bc) {
    case Boundary::zero: return "zero";
    case Boundary::periodic: return "periodic";
    case Boundary::reflective: return "reflective";
  }
  return "unknown";
}

Boundary boundary_from_string(const std::string& name) {
  if (name == "zero") return Boundary::zero;
  if (name == "periodic") return Boundary::periodic;
  if (name == "reflective") return Boundary::reflective;
  throw std::invalid_argument("unknown boundary condition '" + name +
                              "' (expected zero, periodic or reflective)");
}

Index extend_index(Index i, Index n, Boundary bc) {
  if (i >= 0 && i < n) return i;
  switch (bc) {
    case Boundary::zero: return -1;
    case Boundary::periodic: {
      const Index m = i % n;
      return m < 0 ? m + n : m;
    }
    case Boundary::reflective: {
      // Half-sample symmetric extension: -1 -> 0, n -> n-1.
      const Index period = 2 * n;
      Index m = i % period;
      if (m < 0) m += period;
      return m < n ? m : period - 1 - m;
    }
  }
  return -1;
}

ConvolutionOperator::ConvolutionOperator(const Matrix& psf, std::pair<Index, Index> center,
                                         Index image_rows, Index image_cols, Boundary bc)
    : LinearOperator(image_rows * image_cols, image_rows * image_cols),
      image_rows_(image_rows),
      image_cols_(image_cols),
      bc_(bc) {
  for (Index c = 0; c < psf.cols(); ++c) {
    for (Index r = 0; r < psf.rows(); ++r) {
      if (psf(r, c) == 0.0) continue;
      Tap t{r - center.first, c - center.second, psf(r, c)};
      half_width_ = std::max({half_width_, std::abs(t.dr), std::abs(t.dc)});
      taps_.push_back(t);
    }
  }
}

void ConvolutionOperator::index_map(Index offset, Index n, std::vector<Index>& map) const {
  map.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) map[i] = extend_index(i - offset, n, bc_);
}

void ConvolutionOperator::apply_impl(const Vector& x, Vector& y) const {
  y.setZero();
  std::vector<Index> rmap, cmap;
  for (const Tap& t : taps_) {
    index_map(t.dr, image_rows_, rmap);
    index_map(t.dc, image_cols_, cmap);
    for (Index j = 0; j < image_cols_; ++j) {
      const Index sc = cmap[j];
      if (sc < 0) continue;
      const double* src = x.data() + sc * image_rows_;
      double* dst = y.data() + j * image_rows_;
      for (Index i = 0; i < image_rows_; ++i) {
        const Index sr = rmap[i];
        if (sr >= 0) dst[i] += t.weight * src[sr];
      }
    }
  }
}

void ConvolutionOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  x.setZero();
  std::vector<Index> rmap, cmap;
  for (const Tap& t : taps_) {
    index_map(t.dr, image_rows_, rmap);
    index_map(t.dc, image_cols_, cmap);
    for (Index j = 0; j < image_cols_; ++j) {
      const Index sc = cmap[j];
      if (sc < 0) continue;
      double* dst = x.data() + sc * image_rows_;
      const double* src = y.data() + j * image_rows_;
      for (Index i = 0; i < image_rows_; ++i) {
        const Index sr = rmap[i];
        if (sr >= 0) dst[sr] += t.weight * src[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

OperatorPtr make_identity(Index n) { return std::make_shared<IdentityOperator>(n); }
OperatorPtr make_dense(Matrix a) { return std::make_shared<DenseOperator>(std::move(a)); }
OperatorPtr make_sparse(SparseMatrix a) { return std::make_shared<SparseOperator>(std::move(a)); }

OperatorPtr stack_vertical(OperatorPtr top, OperatorPtr bottom, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("stack_vertical: lambda must be >= 0");
  return std::make_shared<StackedOperator>(std::move(top), std::move(bottom), lambda);
}

double adjoint_consistency_test(const LinearOperator& op, int trials, std::uint64_t seed) {
  if (!op.has_adjoint()) throw AdjointUnavailable();
  if (trials < 1) throw std::invalid_argument("adjoint_consistency_test: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vector x = draw(op.cols());
    const Vector y = draw(op.rows());
    const Vector ax = op.apply(x);
    const Vector aty = op.apply_adjoint(y);
    const double scale = ax.norm() * y.norm();
    const double diff = std::abs(ax.dot(y) - x.dot(aty));
    if (scale > 0.0) {
      worst = std::max(worst, diff / scale);
    } else if (diff > 0.0) {
      worst = std::max(worst, diff);
    }
  }
  return worst;
}

Matrix densify(const LinearOperator& op, Index max_entries) {
  if (op.rows() * op.cols() > max_entries) {
    throw DimensionError("operator too large to densify");
  }
  Matrix a(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    a.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return a;
}

Matrix densify_adjoint(const LinearOperator& op, Index max_entries) {
  if (op.rows() * op.cols() > max_entries) {
    throw DimensionError("operator too large to densify");
  }
  Matrix a(op.rows(), op.cols());
  Vector e = Vector::Zero(op.rows());
  for (Index i = 0; i < op.rows(); ++i) {
    e[i] = 1.0;
    a.row(i) = op.apply_adjoint(e).transpose();
    e[i] = 0.0;
  }
  return a;
}

}  // namespace regu
