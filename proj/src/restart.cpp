#include "solver_common.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace regu {

using detail::Recorder;

namespace {

/// Returns L for the next inner solve, or nullopt for L = I.
using WeightRule = std::function<std::optional<SparseMatrix>(const Vector& x)>;

struct RestartSetup {
  RestartMode mode = RestartMode::penalized;
  SolverId inner = SolverId::cgls;
  RegParam inner_reg_param;
  WeightRule weights;
};

Index image_side(const SolveOptions& o, Index n) {
  if (o.grid_rows > 0) {
    if (o.grid_rows * o.grid_rows != n) throw DimensionError("grid_rows^2 must equal the unknown count");
    return o.grid_rows;
  }
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw DimensionError("htv needs a square image; set grid_rows");
  return side;
}

SolveResult restart_impl(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o,
                         const RestartSetup& setup) {
  check_length(b, a.rows(), "restart rhs");
  Recorder rec(b, k, o);
  const Index n = a.cols();
  const double bn = rec.b_norm();
  const bool project = setup.mode != RestartMode::penalized;
  const bool penalize = setup.mode != RestartMode::projected;

  Vector x = o.x0 ? *o.x0 : Vector::Zero(n);
  check_length(x, n, "restart x0");
  if (project) x = detail::project(x, o);
  std::optional<SparseMatrix> l = penalize ? setup.weights(x) : std::nullopt;

  std::vector<double> series;
  for (Index outer = 1; rec.its() < rec.max_iter(); ++outer) {
    const Vector r = b - a.apply(x);
    const double rn = r.norm();
    detail::require_finite(rn, "restart");
    if (rn == 0.0) break;

    SolveOptions in;
    in.noise_level = o.noise_level > 0.0 ? std::min(o.noise_level * bn / rn, 0.999) : 0.0;
    in.eta = o.eta;
    in.reg_param = setup.inner_reg_param;
    if (in.reg_param->kind == RegParamKind::discrep && !(in.noise_level > 0.0)) {
      in.reg_param = RegParam::rule(RegParamKind::gcv);
    }
    if (l) in.reg_matrix = RegularizationMatrix{RegMatrixKind::user, *l, 0, 0};
    in.max_iter = rec.max_iter() - rec.its();
    in.ne_rtol = o.ne_rtol;
    in.gcv_window = o.gcv_window;
    in.gcv_tol = o.gcv_tol;
    in.wgcv_weight = o.wgcv_weight;
    in.reorthogonalize = o.reorthogonalize;
    in.omega = o.omega;
    in.sirt_variant = o.sirt_variant;
    IterSet all(static_cast<std::size_t>(in.max_iter));
    std::iota(all.begin(), all.end(), Index{1});

    SolveResult inner;
    try {
      inner = solve(setup.inner, a, r, all, in);
    } catch (const std::exception& e) {
      throw SolverError(std::string(e.what()) + " (outer iteration " + std::to_string(outer) + ")");
    }

    Vector last = x;
    for (Index j = 0; j < inner.x.cols(); ++j) {
      const Index inner_it = inner.stored[static_cast<std::size_t>(j)];
      if (inner_it > inner.info.its) break;
      Vector xj = x + inner.x.col(j);
      double rnrm;
      if (project) {
        xj = detail::project(xj, o);
        rnrm = bn > 0.0 ? (b - a.apply(xj)).norm() / bn : 0.0;
      } else {
        rnrm = bn > 0.0 ? inner.info.rnrm[static_cast<std::size_t>(inner_it - 1)] * rn / bn : 0.0;
      }
      std::optional<double> lambda;
      if (!inner.info.reg_p.empty()) lambda = inner.info.reg_p[static_cast<std::size_t>(inner_it - 1)];
      rec.record(xj, rnrm, std::nullopt, lambda);
      last = std::move(xj);
      if (rec.its() >= rec.max_iter()) break;
    }
    const double change = (last - x).norm();
    x = std::move(last);

    switch (o.stop_out) {
      case StopOut::xstab: series.push_back(x.norm()); break;
      case StopOut::Lxstab: series.push_back(l ? l->multiply(x).norm() : x.norm()); break;
      case StopOut::regPstab:
        series.push_back(inner.info.reg_p.empty() ? 0.0 : inner.info.reg_p.back());
        break;
    }
    if (change == 0.0) {
      rec.check(StoppingDecision::halt(StopReason::outer_stabilized, 0.0), x);
      break;
    }
    const StoppingDecision d = check_outer_stabilization(series, o.stop_out_tol, o.stop_out_window);
    if (d.stop()) {
      rec.check(d, x);
      if (!o.no_stop_out) break;
    }
    if (penalize) l = setup.weights(x);
  }
  if (rec.its() == 0) {
    rec.record(x, bn > 0.0 ? (b - a.apply(x)).norm() / bn : 0.0);
  }
  return rec.finish(x);
}

RegParam hybrid_inner_default(const SolveOptions& o) {
  return o.noise_level > 0.0 ? RegParam::rule(RegParamKind::discrep) : RegParam::rule(RegParamKind::gcv);
}

}  // namespace

SolveResult restart(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  RestartSetup s;
  s.mode = o.restart_mode;
  s.inner = o.inner_solver.value_or(SolverId::cgls);
  s.inner_reg_param = o.reg_param.value_or(default_reg_param(s.inner, o));
  const std::optional<SparseMatrix> l =
      o.reg_matrix ? std::optional<SparseMatrix>(o.reg_matrix->matrix) : std::nullopt;
  s.weights = [l](const Vector&) { return l; };
  SolveOptions base = o;
  base.reg_matrix.reset();
  return restart_impl(a, b, k, base, s);
}

SolveResult constr_ls(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  SolveOptions oc = o;
  if (!detail::has_constraints(oc)) oc.x_min = 0.0;
  RestartSetup s;
  s.mode = RestartMode::projected;
  s.inner = o.inner_solver.value_or(SolverId::cgls);
  s.inner_reg_param = o.reg_param.value_or(default_reg_param(s.inner, o));
  s.weights = [](const Vector&) { return std::nullopt; };
  return restart_impl(a, b, k, oc, s);
}

SolveResult irn(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  RestartSetup s;
  s.mode = detail::has_constraints(o) ? RestartMode::penalized_projected : RestartMode::penalized;
  s.inner = o.inner_solver.value_or(SolverId::hybrid_lsqr);
  s.inner_reg_param = o.reg_param.value_or(
      s.inner == SolverId::hybrid_lsqr ? hybrid_inner_default(o) : default_reg_param(s.inner, o));
  s.weights = [](const Vector& x) { return std::optional<SparseMatrix>(irn_weights(x)); };
  return restart_impl(a, b, k, o, s);
}

SolveResult htv(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  const Index side = image_side(o, a.cols());
  const TvPair tv = build_tv_pair(side);
  RestartSetup s;
  s.mode = detail::has_constraints(o) ? RestartMode::penalized_projected : RestartMode::penalized;
  s.inner = o.inner_solver.value_or(SolverId::hybrid_lsqr);
  s.inner_reg_param = o.reg_param.value_or(
      s.inner == SolverId::hybrid_lsqr ? hybrid_inner_default(o) : default_reg_param(s.inner, o));
  s.weights = [tv](const Vector& x) {
    // The gradient pair annihilates constants; a small identity block keeps
    // the stacked matrix full rank.
    const Vector w = htv_weight_diagonal(x, tv);
    const double eps = 1e-4 * w.maxCoeff();
    const SparseMatrix lw = vstack(scale_rows(w, tv.dh_aligned), scale_rows(w, tv.dv_aligned));
    return std::optional<SparseMatrix>(vstack(lw, scale_rows(Vector::Constant(w.size(), eps),
                                                             SparseMatrix::identity(w.size()))));
  };
  return restart_impl(a, b, k, o, s);
}

}  // namespace regu
