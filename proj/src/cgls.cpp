#include "solver_common.hpp"

#include <cmath>

namespace regu {

using detail::Recorder;

SolveResult cgls(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  detail::require_adjoint(a, "cgls");
  check_length(b, a.rows(), "cgls rhs");
  Recorder rec(b, k, o);
  const double lambda = detail::fixed_lambda(o, "cgls");
  const Index m = a.rows();
  const Index n = a.cols();

  const PriorconditionerPtr p = detail::make_priorconditioner(o, n);
  // Non-owning handle: the caller keeps `a` alive for the duration of the call.
  OperatorPtr op(&a, [](const LinearOperator*) {});
  if (!p->is_identity()) op = std::make_shared<PriorconditionedOperator>(op, p);
  Vector rhs = b;
  if (lambda > 0.0) {
    op = stack_vertical(op, make_identity(n), lambda);
    rhs = Vector::Zero(m + n);
    rhs.head(m) = b;
  }

  Vector xi = Vector::Zero(n);
  Vector x = Vector::Zero(n);
  Vector r = rhs;
  Vector s = op->apply_adjoint(r);
  const double s0 = s.norm();
  detail::require_finite(s0, "cgls");
  if (s0 == 0.0) {
    rec.record(x, b.norm() > 0.0 ? 1.0 : 0.0, 0.0, lambda);
    rec.check(StoppingDecision::halt(StopReason::ne_residual, 0.0), x);
    return rec.finish(x);
  }
  const double bn = rec.b_norm();
  const bool use_discrepancy = lambda == 0.0 && o.noise_level > 0.0;
  Vector p_dir = s;
  double gamma = s0 * s0;

  for (Index it = 1; it <= rec.max_iter(); ++it) {
    const Vector q = op->apply(p_dir);
    const double delta = q.squaredNorm();
    detail::require_finite(delta, "cgls");
    if (delta == 0.0) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
    const double alpha = gamma / delta;
    xi += alpha * p_dir;
    r -= alpha * q;
    s = op->apply_adjoint(r);
    const double gamma_new = s.squaredNorm();
    detail::require_finite(gamma_new, "cgls");
    p_dir = s + (gamma_new / gamma) * p_dir;
    gamma = gamma_new;

    x = p->is_identity() ? xi : p->solve(xi, false);
    const double rnrm = bn > 0.0 ? r.head(m).norm() / bn : 0.0;
    const double ne = std::sqrt(gamma_new) / s0;
    rec.record(x, rnrm, ne, lambda);

    if (use_discrepancy && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
    if (rec.check(check_ne_residual(ne, o.ne_rtol), x)) break;
    if (gamma_new == 0.0) {
      rec.check(StoppingDecision::halt(StopReason::breakdown, 0.0), x);
      break;
    }
  }
  return rec.finish(x);
}

}  // namespace regu
