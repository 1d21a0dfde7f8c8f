#include "regu/regmat.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>

namespace regu {

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenSparse to_eigen(const SparseMatrix& s) {
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(static_cast<std::size_t>(s.nnz()));
  for (Index i = 0; i < s.rows; ++i) {
    for (Index k = s.row_offsets[i]; k < s.row_offsets[i + 1]; ++k) {
      t.emplace_back(static_cast<int>(i), static_cast<int>(s.column_indices[k]), s.values[k]);
    }
  }
  EigenSparse m(static_cast<int>(s.rows), static_cast<int>(s.cols));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseMatrix laplacian_1d(Index n) {
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, 1.0});
    t.push_back({i, i, -2.0});
    if (i + 1 < n) t.push_back({i, i + 1, 1.0});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

void aligned_gradients(const Vector& x, Index n, Vector& gh, Vector& gv) {
  check_length(x, n * n, "gradient");
  gh = Vector::Zero(n * n);
  gv = Vector::Zero(n * n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      const Index p = r + c * n;
      if (c + 1 < n) gh[p] = x[p + n] - x[p];
      if (r + 1 < n) gv[p] = x[p + 1] - x[p];
    }
  }
}

}  // namespace

const char* to_string(RegMatrixKind kind) {
  switch (kind) {
    case RegMatrixKind::identity: return "identity";
    case RegMatrixKind::laplacian1d: return "laplacian1d";
    case RegMatrixKind::laplacian2d: return "laplacian2d";
    case RegMatrixKind::tv_pair: return "tv_pair";
    case RegMatrixKind::user: return "user";
  }
  return "unknown";
}

RegularizationMatrix build_laplacian(LaplacianDim dim, Index n) {
  if (n < 2) throw std::invalid_argument("build_laplacian: n must be >= 2");
  RegularizationMatrix out;
  const SparseMatrix l1 = laplacian_1d(n);
  if (dim == LaplacianDim::one_d) {
    out.kind = RegMatrixKind::laplacian1d;
    out.matrix = l1;
    out.grid_rows = n;
    out.grid_cols = 1;
  } else {
    const SparseMatrix eye = SparseMatrix::identity(n);
    const SparseMatrix a = kron(eye, l1);
    const SparseMatrix b = kron(l1, eye);
    std::vector<Triplet> t;
    for (const SparseMatrix* m : {&a, &b}) {
      for (Index i = 0; i < m->rows; ++i) {
        for (Index k = m->row_offsets[i]; k < m->row_offsets[i + 1]; ++k) {
          t.push_back({i, m->column_indices[k], m->values[k]});
        }
      }
    }
    out.kind = RegMatrixKind::laplacian2d;
    out.matrix = SparseMatrix::from_triplets(n * n, n * n, std::move(t));
    out.grid_rows = n;
    out.grid_cols = n;
  }
  return out;
}

TvPair build_tv_pair(Index n) {
  if (n < 2) throw std::invalid_argument("build_tv_pair: n must be >= 2");
  const Index N = n * n;
  std::vector<Triplet> h, v, ha, va;
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      const Index p = r + c * n;
      if (c + 1 < n) {
        const Index row = r + c * n;
        h.push_back({row, p, -1.0});
        h.push_back({row, p + n, 1.0});
        ha.push_back({p, p, -1.0});
        ha.push_back({p, p + n, 1.0});
      }
      if (r + 1 < n) {
        const Index row = r + c * (n - 1);
        v.push_back({row, p, -1.0});
        v.push_back({row, p + 1, 1.0});
        va.push_back({p, p, -1.0});
        va.push_back({p, p + 1, 1.0});
      }
    }
  }
  TvPair tv;
  tv.n = n;
  tv.dh = SparseMatrix::from_triplets(n * (n - 1), N, std::move(h));
  tv.dv = SparseMatrix::from_triplets(n * (n - 1), N, std::move(v));
  tv.dh_aligned = SparseMatrix::from_triplets(N, N, std::move(ha));
  tv.dv_aligned = SparseMatrix::from_triplets(N, N, std::move(va));
  return tv;
}

double total_variation(const Vector& x, Index n) {
  Vector gh, gv;
  aligned_gradients(x, n, gh, gv);
  return (gh.array().square() + gv.array().square()).sqrt().sum();
}

double relative_floor(const Vector& v) {
  const double m = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
  return m > 0.0 ? 1e-10 * m : 1.0;
}

SparseMatrix irn_weights(const Vector& x, std::optional<double> floor) {
  const double tau = floor.value_or(relative_floor(x));
  if (!(tau > 0.0)) throw std::invalid_argument("irn_weights: floor must be positive");
  Vector d(x.size());
  for (Index i = 0; i < x.size(); ++i) d[i] = 1.0 / std::sqrt(std::max(std::abs(x[i]), tau));
  return SparseMatrix::diagonal(d);
}

Vector htv_weight_diagonal(const Vector& x, const TvPair& tv, std::optional<double> floor) {
  Vector gh, gv;
  aligned_gradients(x, tv.n, gh, gv);
  const Vector mag2 = gh.array().square() + gv.array().square();
  const double tau = floor.value_or(relative_floor(mag2.cwiseSqrt()));
  if (!(tau > 0.0)) throw std::invalid_argument("htv_weights: floor must be positive");
  Vector w(mag2.size());
  for (Index i = 0; i < mag2.size(); ++i) w[i] = std::pow(std::max(mag2[i], tau * tau), -0.25);
  return w;
}

SparseMatrix htv_weights(const Vector& x, const TvPair& tv, std::optional<double> floor) {
  const Vector w = htv_weight_diagonal(x, tv, floor);
  return vstack(scale_rows(w, tv.dh_aligned), scale_rows(w, tv.dv_aligned));
}

// ---------------------------------------------------------------------------
// Priorconditioner
// ---------------------------------------------------------------------------

struct Priorconditioner::Impl {
  // Square L: factor L and L^T. Tall L: R and column permutation of L P = Q R.
  bool square = true;
  EigenSparse l;
  Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu_t;
  EigenSparse r;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
};

Priorconditioner::Priorconditioner(Index n, std::shared_ptr<const Impl> impl)
    : n_(n), impl_(std::move(impl)) {}

std::shared_ptr<const Priorconditioner> Priorconditioner::identity(Index n) {
  return std::shared_ptr<const Priorconditioner>(new Priorconditioner(n, nullptr));
}

std::shared_ptr<const Priorconditioner> Priorconditioner::create(const RegularizationMatrix& l) {
  if (l.kind == RegMatrixKind::identity) return identity(l.matrix.cols);
  return create(l.matrix);
}

std::shared_ptr<const Priorconditioner> Priorconditioner::create(const SparseMatrix& l) {
  const Index n = l.cols;
  if (l.rows < n) {
    throw std::invalid_argument("regularization matrix must have full rank (fewer rows than columns)");
  }
  auto impl = std::make_shared<Impl>();
  const EigenSparse m = to_eigen(l);
  if (l.rows == n) {
    impl->square = true;
    impl->l = m;
    impl->lu.compute(m);
    if (impl->lu.info() != Eigen::Success || !std::isfinite(impl->lu.logAbsDeterminant())) {
      throw std::invalid_argument("regularization matrix must have full rank");
    }
    impl->lu_t.compute(EigenSparse(m.transpose()));
    if (impl->lu_t.info() != Eigen::Success) {
      throw std::invalid_argument("regularization matrix must have full rank");
    }
  } else {
    impl->square = false;
    Eigen::SparseQR<EigenSparse, Eigen::COLAMDOrdering<int>> qr;
    qr.compute(m);
    if (qr.info() != Eigen::Success || qr.rank() < n) {
      throw std::invalid_argument("regularization matrix must have full rank");
    }
    impl->r = EigenSparse(qr.matrixR().topLeftCorner(n, n));
    impl->r.makeCompressed();
    impl->perm = qr.colsPermutation();
    const Vector d = impl->r.diagonal();
    if ((d.array().abs() == 0.0).any()) {
      throw std::invalid_argument("regularization matrix must have full rank");
    }
  }
  return std::shared_ptr<const Priorconditioner>(new Priorconditioner(n, std::move(impl)));
}

Vector Priorconditioner::solve(const Vector& v, bool transposed) const {
  check_length(v, n_, "priorcondition_solve");
  if (!impl_) return v;
  if (impl_->square) {
    return transposed ? Vector(impl_->lu_t.solve(v)) : Vector(impl_->lu.solve(v));
  }
  if (transposed) {
    // L^T = P R^T, so L^{-T} v = R^{-T} P^T v.
    Vector w = impl_->perm.transpose() * v;
    return impl_->r.transpose().triangularView<Eigen::Lower>().solve(w);
  }
  const Vector w = impl_->r.triangularView<Eigen::Upper>().solve(v);
  return impl_->perm * w;
}

Vector Priorconditioner::apply(const Vector& v) const {
  check_length(v, n_, "priorconditioner apply");
  if (!impl_) return v;
  if (impl_->square) return impl_->l * v;
  const Vector w = impl_->perm.transpose() * v;
  return impl_->r * w;
}

Vector Priorconditioner::apply_transposed(const Vector& v) const {
  check_length(v, n_, "priorconditioner apply_transposed");
  if (!impl_) return v;
  if (impl_->square) return impl_->l.transpose() * v;
  const Vector w = impl_->r.transpose() * v;
  return impl_->perm * w;
}

Vector priorcondition_solve(const Priorconditioner& p, const Vector& v, bool transposed) {
  return p.solve(v, transposed);
}

PriorconditionedOperator::PriorconditionedOperator(OperatorPtr a, PriorconditionerPtr p)
    : LinearOperator(a->rows(), a->cols()), a_(std::move(a)), p_(std::move(p)) {
  if (p_->size() != a_->cols()) {
    throw DimensionError("priorconditioner size does not match operator columns");
  }
}

void PriorconditionedOperator::apply_impl(const Vector& x, Vector& y) const {
  y = a_->apply(p_->solve(x, false));
}

void PriorconditionedOperator::apply_adjoint_impl(const Vector& y, Vector& x) const {
  x = p_->solve(a_->apply_adjoint(y), true);
}

}  // namespace regu
