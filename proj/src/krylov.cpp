#include "solver_common.hpp"

#include <Eigen/QR>

#include <cmath>
#include <deque>

namespace regu {

using detail::Recorder;

namespace {

constexpr double kBreakdownTol = 1e-12;

OperatorPtr borrow(const LinearOperator& a) {
  return OperatorPtr(&a, [](const LinearOperator*) {});
}

OperatorPtr with_priorconditioner(const LinearOperator& a, const PriorconditionerPtr& p) {
  OperatorPtr op = borrow(a);
  if (!p->is_identity()) op = std::make_shared<PriorconditionedOperator>(op, p);
  return op;
}

Vector combine(const std::vector<Vector>& basis, const Vector& y, Index n) {
  Vector x = Vector::Zero(n);
  for (Index j = 0; j < y.size(); ++j) x += y[j] * basis[static_cast<std::size_t>(j)];
  return x;
}

/// Golub-Kahan bidiagonalization A V_k = U_{k+1} B_k started from b.
class GolubKahan {
public:
  GolubKahan(OperatorPtr op, const Vector& b, bool reorth) : op_(std::move(op)), reorth_(reorth) {
    beta1_ = b.norm();
    if (beta1_ == 0.0) {
      exhausted_ = true;
      return;
    }
    u_.push_back(b / beta1_);
    Vector v = op_->apply_adjoint(u_[0]);
    const double alpha = v.norm();
    detail::require_finite(alpha, "bidiagonalization");
    if (alpha == 0.0) {
      exhausted_ = true;
      return;
    }
    v_.push_back(v / alpha);
    alpha_.push_back(alpha);
  }

  bool exhausted() const { return exhausted_; }
  Index k() const { return static_cast<Index>(beta_.size()); }
  double beta1() const { return beta1_; }
  const std::vector<Vector>& v() const { return v_; }
  const std::vector<Vector>& u() const { return u_; }

  /// Adds column k+1 of B. Sets exhausted() when the basis cannot grow.
  void extend() {
    const std::size_t k = beta_.size();
    Vector w = op_->apply(v_[k]);
    const double scale = w.norm();
    detail::require_finite(scale, "bidiagonalization");
    w -= alpha_[k] * u_[k];
    Vector h;
    double beta = reorth_ ? detail::orthogonalize(u_, w, h, true) : w.norm();
    if (beta <= kBreakdownTol * scale) beta = 0.0;
    beta_.push_back(beta);
    if (beta == 0.0) {
      exhausted_ = true;
      return;
    }
    u_.push_back(w / beta);
    Vector z = op_->apply_adjoint(u_.back());
    const double zscale = z.norm();
    detail::require_finite(zscale, "bidiagonalization");
    z -= beta * v_[k];
    double alpha = reorth_ ? detail::orthogonalize(v_, z, h, true) : z.norm();
    if (alpha <= kBreakdownTol * zscale) {
      exhausted_ = true;
      return;
    }
    v_.push_back(z / alpha);
    alpha_.push_back(alpha);
  }

  ProjectedProblem projected(Index full_rows) const {
    const Index k = this->k();
    ProjectedProblem p;
    p.r = Matrix::Zero(k + 1, k);
    for (Index j = 0; j < k; ++j) {
      p.r(j, j) = alpha_[static_cast<std::size_t>(j)];
      p.r(j + 1, j) = beta_[static_cast<std::size_t>(j)];
    }
    p.rhs = Vector::Zero(k + 1);
    p.rhs[0] = beta1_;
    p.full_rows = full_rows;
    return p;
  }

private:
  OperatorPtr op_;
  bool reorth_;
  double beta1_ = 0.0;
  bool exhausted_ = false;
  std::vector<Vector> u_;
  std::vector<Vector> v_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

/// (Flexible) Arnoldi A Z_k = V_{k+1} H_k started from `start`.
class Arnoldi {
public:
  Arnoldi(OperatorPtr op, const Vector& start, bool reorth) : op_(std::move(op)), reorth_(reorth) {
    beta_ = start.norm();
    if (beta_ == 0.0) {
      exhausted_ = true;
      return;
    }
    v_.push_back(start / beta_);
  }

  bool exhausted() const { return exhausted_; }
  Index k() const { return static_cast<Index>(z_.size()); }
  double beta() const { return beta_; }
  const std::vector<Vector>& v() const { return v_; }
  const std::vector<Vector>& z() const { return z_; }
  const Matrix& h() const { return h_; }

  /// weights empty: z_k = v_k; otherwise z_k = diag(weights) v_k.
  void extend(const Vector* weights) {
    const std::size_t k = z_.size();
    z_.push_back(weights ? Vector(weights->cwiseProduct(v_[k])) : v_[k]);
    Vector w = op_->apply(z_.back());
    const double scale = w.norm();
    detail::require_finite(scale, "arnoldi");
    Vector coeff;
    double hn = detail::orthogonalize(v_, w, coeff, reorth_);
    if (hn <= kBreakdownTol * scale) hn = 0.0;
    const Index kk = static_cast<Index>(k) + 1;
    Matrix h = Matrix::Zero(kk + 1, kk);
    if (k > 0) h.topLeftCorner(kk, kk - 1) = h_;
    h.col(kk - 1).head(kk) = coeff;
    h(kk, kk - 1) = hn;
    h_ = std::move(h);
    if (hn == 0.0) {
      exhausted_ = true;
      return;
    }
    v_.push_back(w / hn);
  }

  ProjectedProblem projected(Index full_rows) const {
    ProjectedProblem p;
    p.r = h_;
    p.rhs = Vector::Zero(h_.rows());
    p.rhs[0] = beta_;
    p.full_rows = full_rows;
    return p;
  }

private:
  OperatorPtr op_;
  bool reorth_;
  double beta_ = 0.0;
  bool exhausted_ = false;
  std::vector<Vector> v_;
  std::vector<Vector> z_;
  Matrix h_;
};

struct LambdaPick {
  double lambda = 0.0;
  double gcv = 0.0;
};

LambdaPick pick_lambda(const ProjectedSvd& svd, const RegParam& rp, const SolveOptions& o, double bn,
                       double previous, Recorder& rec) {
  LambdaPick out;
  LambdaSpec spec;
  spec.wgcv_weight = o.wgcv_weight;
  spec.previous = previous;
  switch (rp.kind) {
    case RegParamKind::fixed: out.lambda = rp.value; return out;
    case RegParamKind::off: return out;
    case RegParamKind::gcv: spec.rule = LambdaRule::gcv; break;
    case RegParamKind::wgcv: spec.rule = LambdaRule::wgcv; break;
    case RegParamKind::modified_gcv: spec.rule = LambdaRule::modified_gcv; break;
    case RegParamKind::discrep:
      spec.rule = LambdaRule::discrep;
      spec.target = o.eta * o.noise_level * bn;
      break;
  }
  const LambdaChoice c = choose_lambda(svd, spec);
  if (c.fallback) rec.warn("lambda search failed; lambda set to 0");
  out.lambda = c.lambda;
  out.gcv = c.value;
  return out;
}

struct WindowEntry {
  Index it;
  Vector x;
  double g;
};

/// Shared iteration of the hybrid methods: extend the basis, regularize the
/// projected problem, log, and apply the stopping rules.
template <class Basis, class Extend, class ToX>
SolveResult hybrid_loop(Basis& basis, Extend extend, ToX to_x, const LinearOperator& a,
                        const SolveOptions& o, const RegParam& rp, Recorder& rec) {
  const Index n = a.cols();
  const double bn = rec.b_norm();
  Vector x = Vector::Zero(n);
  if (basis.exhausted()) {
    rec.record(x, bn > 0.0 ? 1.0 : 0.0, std::nullopt, 0.0);
    rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
    return rec.finish(x);
  }
  const bool gcv_rule = rp.kind == RegParamKind::gcv || rp.kind == RegParamKind::wgcv ||
                        rp.kind == RegParamKind::modified_gcv;
  std::vector<double> g_hist;
  std::deque<WindowEntry> window;
  double previous = 0.0;

  for (Index it = 1; it <= rec.max_iter(); ++it) {
    extend(it);
    const ProjectedProblem proj = basis.projected(a.rows());
    const ProjectedSvd svd(proj);
    RegParam this_rp = rp;
    if (rp.kind == RegParamKind::modified_gcv && proj.full_rows <= proj.k()) this_rp.kind = RegParamKind::gcv;
    const LambdaPick pick = pick_lambda(svd, this_rp, o, bn, previous, rec);
    previous = pick.lambda;
    const Vector y = svd.solve(pick.lambda);
    x = to_x(y);
    const double rnrm = bn > 0.0 ? svd.residual_norm(pick.lambda) / bn : 0.0;
    detail::require_finite(rnrm, "hybrid");
    rec.record(x, rnrm, std::nullopt, pick.lambda);

    if (rp.kind == RegParamKind::discrep) {
      const double r0 = svd.residual_norm(0.0) / bn;
      if (rec.check(check_discrepancy(r0, o.noise_level, o.eta), x)) break;
    }
    if (gcv_rule) {
      g_hist.push_back(pick.gcv);
      window.push_back({it, x, pick.gcv});
      if (window.size() > static_cast<std::size_t>(o.gcv_window)) window.pop_front();
      const StoppingDecision d = check_gcv_stop(g_hist, o.gcv_window, o.gcv_tol);
      if (d.stop()) {
        const WindowEntry* best = &window.front();
        for (const auto& e : window) {
          if (e.g < best->g) best = &e;
        }
        if (rec.check(d, best->x, best->it)) break;
      }
    }
    if (rec.check(check_residual_stabilized(rec.rnrm(), o.gcv_window, o.gcv_tol), x)) break;
    if (basis.exhausted()) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
  }
  return rec.finish(x);
}

}  // namespace

}  // namespace regu

namespace regu {

SolveResult hybrid_lsqr(const LinearOperator& a, const Vector& b, const IterSet& k,
                        const SolveOptions& o) {
  detail::require_adjoint(a, "hybrid_lsqr");
  check_length(b, a.rows(), "hybrid_lsqr rhs");
  Recorder rec(b, k, o);
  const RegParam rp = o.reg_param.value_or(default_reg_param(SolverId::hybrid_lsqr, o));
  const PriorconditionerPtr p = detail::make_priorconditioner(o, a.cols());
  GolubKahan gk(with_priorconditioner(a, p), b, o.reorthogonalize);
  auto extend = [&](Index) { gk.extend(); };
  auto to_x = [&](const Vector& y) {
    const Vector xi = combine(gk.v(), y, a.cols());
    return p->is_identity() ? xi : p->solve(xi, false);
  };
  return hybrid_loop(gk, extend, to_x, a, o, rp, rec);
}

SolveResult hybrid_gmres(const LinearOperator& a, const Vector& b, const IterSet& k,
                         const SolveOptions& o) {
  detail::require_square(a, "hybrid_gmres");
  check_length(b, a.rows(), "hybrid_gmres rhs");
  Recorder rec(b, k, o);
  const RegParam rp = o.reg_param.value_or(default_reg_param(SolverId::hybrid_gmres, o));
  const PriorconditionerPtr p = detail::make_priorconditioner(o, a.cols());
  Arnoldi ar(with_priorconditioner(a, p), b, o.reorthogonalize);
  auto extend = [&](Index) { ar.extend(nullptr); };
  auto to_x = [&](const Vector& y) {
    const Vector xi = combine(ar.z(), y, a.cols());
    return p->is_identity() ? xi : p->solve(xi, false);
  };
  return hybrid_loop(ar, extend, to_x, a, o, rp, rec);
}

SolveResult hybrid_fgmres(const LinearOperator& a, const Vector& b, const IterSet& k,
                          const SolveOptions& o) {
  detail::require_square(a, "hybrid_fgmres");
  check_length(b, a.rows(), "hybrid_fgmres rhs");
  if (o.reg_matrix && o.reg_matrix->kind != RegMatrixKind::identity) {
    throw std::invalid_argument("hybrid_fgmres supports L = I only");
  }
  Recorder rec(b, k, o);
  const RegParam rp = o.reg_param.value_or(default_reg_param(SolverId::hybrid_fgmres, o));
  Arnoldi ar(borrow(a), b, o.reorthogonalize);
  Vector x_prev = Vector::Zero(a.cols());
  auto extend = [&](Index) {
    const double xmax = x_prev.size() ? x_prev.cwiseAbs().maxCoeff() : 0.0;
    if (!o.flexible_weights || xmax == 0.0) {
      ar.extend(nullptr);
      return;
    }
    const double tau = 1e-10 * xmax;
    const Vector w = x_prev.cwiseAbs().cwiseMax(tau);
    ar.extend(&w);
  };
  auto to_x = [&](const Vector& y) {
    x_prev = combine(ar.z(), y, a.cols());
    return x_prev;
  };
  return hybrid_loop(ar, extend, to_x, a, o, rp, rec);
}

SolveResult rrgmres(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  detail::require_square(a, "rrgmres");
  check_length(b, a.rows(), "rrgmres rhs");
  Recorder rec(b, k, o);
  const PriorconditionerPtr p = detail::make_priorconditioner(o, a.cols());
  const OperatorPtr op = with_priorconditioner(a, p);
  const Index n = a.cols();
  const double bn = rec.b_norm();
  Arnoldi ar(op, op->apply(b), o.reorthogonalize);
  Vector x = Vector::Zero(n);
  if (ar.exhausted()) {
    rec.record(x, bn > 0.0 ? 1.0 : 0.0);
    rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
    return rec.finish(x);
  }
  std::vector<double> vtb;
  for (Index it = 1; it <= rec.max_iter(); ++it) {
    ar.extend(nullptr);
    while (vtb.size() < ar.v().size()) vtb.push_back(ar.v()[vtb.size()].dot(b));
    ProjectedProblem proj;
    proj.r = ar.h();
    proj.rhs = Vector::Zero(proj.r.rows());
    for (std::size_t j = 0; j < vtb.size() && j < static_cast<std::size_t>(proj.rhs.size()); ++j) {
      proj.rhs[static_cast<Index>(j)] = vtb[j];
    }
    proj.full_rows = a.rows();
    const Vector y = ProjectedSvd(proj).solve(0.0);
    const Vector xi = combine(ar.z(), y, n);
    x = p->is_identity() ? xi : p->solve(xi, false);
    const Vector hy = proj.r * y;
    Vector r = b;
    for (std::size_t j = 0; j < ar.v().size() && j < static_cast<std::size_t>(hy.size()); ++j) {
      r -= hy[static_cast<Index>(j)] * ar.v()[j];
    }
    const double rnrm = bn > 0.0 ? r.norm() / bn : 0.0;
    detail::require_finite(rnrm, "rrgmres");
    rec.record(x, rnrm);
    if (o.noise_level > 0.0 && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
    if (ar.exhausted()) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
  }
  return rec.finish(x);
}

SolveResult enriched_cgls(const LinearOperator& a, const Vector& b, const IterSet& k,
                          const SolveOptions& o) {
  detail::require_adjoint(a, "enrich");
  check_length(b, a.rows(), "enrich rhs");
  Recorder rec(b, k, o);
  const double lambda = detail::fixed_lambda(o, "enrich");
  const Index m = a.rows();
  const Index n = a.cols();
  const double bn = rec.b_norm();

  const PriorconditionerPtr p = detail::make_priorconditioner(o, n);
  OperatorPtr op = with_priorconditioner(a, p);
  Vector rhs = b;
  if (lambda > 0.0) {
    op = stack_vertical(op, make_identity(n), lambda);
    rhs = Vector::Zero(m + n);
    rhs.head(m) = b;
  }

  // Orthonormal enrichment basis in the substituted variable.
  Matrix wq(n, 0);
  if (o.enrichment_basis && o.enrichment_basis->cols() > 0) {
    const Matrix& w = *o.enrichment_basis;
    if (w.rows() != n) throw DimensionError("enrichment basis rows must equal operator columns");
    Matrix wxi(n, w.cols());
    for (Index j = 0; j < w.cols(); ++j) wxi.col(j) = p->is_identity() ? Vector(w.col(j)) : p->apply(w.col(j));
    Eigen::ColPivHouseholderQR<Matrix> qr(wxi);
    qr.setThreshold(1e-12);
    if (qr.rank() < w.cols()) throw std::invalid_argument("enrichment basis is rank deficient");
    wq = qr.householderQ() * Matrix::Identity(n, w.cols());
  }
  const Index np = wq.cols();
  Matrix y_w(op->rows(), np);
  for (Index j = 0; j < np; ++j) y_w.col(j) = op->apply(wq.col(j));

  GolubKahan gk(op, rhs, o.reorthogonalize);
  Vector x = Vector::Zero(n);
  const bool use_discrepancy = lambda == 0.0 && o.noise_level > 0.0;
  for (Index it = 1; it <= rec.max_iter(); ++it) {
    if (!gk.exhausted()) gk.extend();
    const Index kk = gk.k();
    const Matrix bk = gk.projected(m).r;
    const Index nu = static_cast<Index>(gk.u().size());
    // Split Y into its components along U_{k+1} and orthogonal to it.
    Matrix g = Matrix::Zero(kk + 1, np);
    Matrix yp = y_w;
    for (Index i = 0; i < nu; ++i) {
      const Vector& u = gk.u()[static_cast<std::size_t>(i)];
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::RowVectorXd c = u.transpose() * yp;
        yp -= u * c;
        g.row(i) += c;
      }
    }
    Matrix rp = Matrix::Zero(np, np);
    if (np > 0) {
      Eigen::HouseholderQR<Matrix> qr(yp);
      rp = qr.matrixQR().topRows(np).triangularView<Eigen::Upper>();
    }
    Matrix s = Matrix::Zero(kk + 1 + np, kk + np);
    s.topLeftCorner(kk + 1, kk) = bk;
    s.topRightCorner(kk + 1, np) = g;
    s.bottomRightCorner(np, np) = rp;
    Vector srhs = Vector::Zero(kk + 1 + np);
    srhs[0] = gk.beta1();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(s);
    cod.setThreshold(1e-13);
    const Vector yz = cod.solve(srhs);
    const Vector yk = yz.head(kk);
    const Vector zk = yz.tail(np);
    Vector xi = combine(gk.v(), yk, n);
    if (np > 0) xi += wq * zk;
    x = p->is_identity() ? xi : p->solve(xi, false);
    const Vector byk = bk * yk;
    Vector r = rhs;
    for (Index i = 0; i < nu && i < byk.size(); ++i) r -= byk[i] * gk.u()[static_cast<std::size_t>(i)];
    if (np > 0) r -= y_w * zk;
    const double rnrm = bn > 0.0 ? r.head(m).norm() / bn : 0.0;
    detail::require_finite(rnrm, "enrich");
    rec.record(x, rnrm, std::nullopt, lambda);
    if (use_discrepancy && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
    if (gk.exhausted()) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
  }
  return rec.finish(x);
}

}  // namespace regu
