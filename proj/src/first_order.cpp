#include "solver_common.hpp"

#include <algorithm>
#include <cmath>

namespace regu {

using detail::Recorder;

SolveResult fista(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  detail::require_adjoint(a, "fista");
  check_length(b, a.rows(), "fista rhs");
  if (o.reg_matrix && o.reg_matrix->kind != RegMatrixKind::identity) {
    throw std::invalid_argument("fista supports L = I only");
  }
  Recorder rec(b, k, o);
  const double lambda = detail::fixed_lambda(o, "fista");
  const double l2 = lambda * lambda;
  const Index n = a.cols();
  const double bn = rec.b_norm();
  const bool constrained = detail::has_constraints(o);

  double omega = 0.0;
  if (o.omega) {
    omega = *o.omega;
    if (!(omega > 0.0)) throw std::invalid_argument("fista: omega must be > 0");
  } else {
    const double lip = 1.01 * estimate_norm2_squared(a, 50) + l2;
    omega = lip > 0.0 ? 1.0 / lip : 1.0;
  }

  const Vector atb = a.apply_adjoint(b);
  const double atb_norm = atb.norm();
  Vector x = o.x0 ? *o.x0 : Vector::Zero(n);
  check_length(x, n, "fista x0");
  if (constrained) x = detail::project(x, o);
  Vector ax = a.apply(x);
  Vector y = x;
  Vector ay = ax;
  double t = 1.0;

  for (Index it = 1; it <= rec.max_iter(); ++it) {
    const Vector grad = a.apply_adjoint(ay - b) + l2 * y;
    Vector x_new = y - omega * grad;
    if (constrained) x_new = detail::project(x_new, o);
    const Vector ax_new = a.apply(x_new);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double c = (t - 1.0) / t_new;
    y = x_new + c * (x_new - x);
    ay = ax_new + c * (ax_new - ax);
    x = std::move(x_new);
    ax = ax_new;
    t = t_new;

    const double rnrm = bn > 0.0 ? (b - ax).norm() / bn : 0.0;
    detail::require_finite(rnrm, "fista");
    std::optional<double> ne;
    if (!constrained && atb_norm > 0.0) {
      ne = (atb - a.apply_adjoint(ax) - l2 * x).norm() / atb_norm;
    }
    rec.record(x, rnrm, ne, lambda);
    if (lambda == 0.0 && o.noise_level > 0.0 &&
        rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) {
      break;
    }
    if (ne && rec.check(check_ne_residual(*ne, o.ne_rtol), x)) break;
  }
  return rec.finish(x);
}

SolveResult mrnsd(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  detail::require_adjoint(a, "mrnsd");
  check_length(b, a.rows(), "mrnsd rhs");
  Recorder rec(b, k, o);
  const Index n = a.cols();
  const double bn = rec.b_norm();

  const Vector atb = a.apply_adjoint(b);
  const double atb_norm = atb.norm();
  Vector x;
  if (o.x0) {
    x = *o.x0;
    check_length(x, n, "mrnsd x0");
    if (!(x.size() == 0 || x.minCoeff() > 0.0)) {
      throw std::invalid_argument("mrnsd: initial vector must be strictly positive");
    }
  } else {
    const double s = atb.size() ? atb.cwiseAbs().maxCoeff() : 0.0;
    x = Vector::Constant(n, s > 0.0 ? 1e-6 * s : 1e-6);
  }
  Vector r = b - a.apply(x);
  Vector g = a.apply_adjoint(r);

  for (Index it = 1; it <= rec.max_iter(); ++it) {
    const Vector d = x.cwiseProduct(g);
    const double gd = g.dot(d);
    const Vector ad = a.apply(d);
    const double add = ad.squaredNorm();
    detail::require_finite(add, "mrnsd");
    if (add > 0.0 && gd > 0.0) {
      double step = gd / add;
      for (Index i = 0; i < n; ++i) {
        if (d[i] < 0.0) step = std::min(step, -x[i] / d[i]);
      }
      x += step * d;
      x = x.cwiseMax(0.0);
      r -= step * ad;
      g = a.apply_adjoint(r);
    }
    const double rnrm = bn > 0.0 ? r.norm() / bn : 0.0;
    const double ne = atb_norm > 0.0 ? g.norm() / atb_norm : 0.0;
    rec.record(x, rnrm, ne);
    if (o.noise_level > 0.0 && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
    if (rec.check(check_ne_residual(ne, o.ne_rtol), x)) break;
    if (!(add > 0.0 && gd > 0.0)) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
  }
  return rec.finish(x);
}

}  // namespace regu
