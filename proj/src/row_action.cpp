#include "solver_common.hpp"

#include <algorithm>
#include <cmath>

namespace regu {

using detail::Recorder;

namespace {

SparseMatrix require_rows(const LinearOperator& a) {
  std::optional<SparseMatrix> rows = a.explicit_rows();
  if (!rows) throw std::invalid_argument("ART requires explicit rows");
  return std::move(*rows);
}

Vector initial_iterate(const SolveOptions& o, Index n) {
  if (!o.x0) return Vector::Zero(n);
  check_length(*o.x0, n, "initial iterate");
  return *o.x0;
}

}  // namespace

SolveResult art(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  check_length(b, a.rows(), "art rhs");
  const SparseMatrix s = require_rows(a);
  Recorder rec(b, k, o);
  const double omega = o.omega.value_or(1.0);
  const double bn = rec.b_norm();
  const bool box = o.x_min.has_value() || o.x_max.has_value();
  const double lo = o.x_min.value_or(-std::numeric_limits<double>::infinity());
  const double hi = o.x_max.value_or(std::numeric_limits<double>::infinity());

  std::vector<double> norm2(static_cast<std::size_t>(s.rows), 0.0);
  for (Index i = 0; i < s.rows; ++i) {
    for (Index q = s.row_offsets[i]; q < s.row_offsets[i + 1]; ++q) norm2[i] += s.values[q] * s.values[q];
  }

  Vector x = initial_iterate(o, a.cols());
  if (detail::has_constraints(o)) x = detail::project(x, o);
  for (Index it = 1; it <= rec.max_iter(); ++it) {
    for (Index i = 0; i < s.rows; ++i) {
      if (norm2[i] == 0.0) continue;
      double dot = 0.0;
      for (Index q = s.row_offsets[i]; q < s.row_offsets[i + 1]; ++q) dot += s.values[q] * x[s.column_indices[q]];
      const double c = omega * (b[i] - dot) / norm2[i];
      for (Index q = s.row_offsets[i]; q < s.row_offsets[i + 1]; ++q) {
        double& xi = x[s.column_indices[q]];
        xi += c * s.values[q];
        if (box) xi = std::clamp(xi, lo, hi);
      }
      if (o.x_energy) x = detail::project(x, o);
    }
    const double rnrm = bn > 0.0 ? (b - s.multiply(x)).norm() / bn : 0.0;
    detail::require_finite(rnrm, "art");
    rec.record(x, rnrm);
    if (o.noise_level > 0.0 && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
  }
  return rec.finish(x);
}

SolveResult sirt(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o) {
  detail::require_adjoint(a, "sirt");
  check_length(b, a.rows(), "sirt rhs");
  Recorder rec(b, k, o);
  const Index m = a.rows();
  const Index n = a.cols();
  const double bn = rec.b_norm();

  Vector d1 = Vector::Ones(n);
  Vector d2 = Vector::Ones(m);
  bool zero_norm = false;
  if (o.sirt_variant != SirtVariant::landweber) {
    std::optional<SparseMatrix> rows = a.explicit_rows();
    if (!rows) throw std::invalid_argument("SIRT variant requires explicit rows");
    const SparseMatrix& s = *rows;
    Vector row1 = Vector::Zero(m), row2 = Vector::Zero(m), col1 = Vector::Zero(n);
    for (Index i = 0; i < m; ++i) {
      for (Index q = s.row_offsets[i]; q < s.row_offsets[i + 1]; ++q) {
        const double v = std::abs(s.values[q]);
        row1[i] += v;
        row2[i] += v * v;
        col1[s.column_indices[q]] += v;
      }
    }
    if (o.sirt_variant == SirtVariant::sart) {
      for (Index i = 0; i < m; ++i) {
        d2[i] = row1[i] > 0.0 ? 1.0 / row1[i] : 0.0;
        zero_norm |= row1[i] == 0.0;
      }
      for (Index j = 0; j < n; ++j) {
        d1[j] = col1[j] > 0.0 ? 1.0 / col1[j] : 0.0;
        zero_norm |= col1[j] == 0.0;
      }
    } else {
      for (Index i = 0; i < m; ++i) {
        d2[i] = row2[i] > 0.0 ? 1.0 / (static_cast<double>(m) * row2[i]) : 0.0;
        zero_norm |= row2[i] == 0.0;
      }
    }
  }
  if (zero_norm) rec.warn("zero row or column norm; weight set to 0");

  double omega = 1.0;
  if (o.omega) {
    omega = *o.omega;
  } else if (o.sirt_variant != SirtVariant::sart) {
    // Step bound 2 / ||D2^(1/2) A D1^(1/2)||^2 with a safety factor.
    const Vector s1 = d1.cwiseSqrt();
    const Vector s2 = d2.cwiseSqrt();
    FunctionalOperator weighted(
        m, n, [&](const Vector& x) { return Vector(s2.cwiseProduct(a.apply(s1.cwiseProduct(x)))); },
        [&](const Vector& y) { return Vector(s1.cwiseProduct(a.apply_adjoint(s2.cwiseProduct(y)))); });
    const double est = estimate_norm2_squared(weighted, 10);
    omega = est > 0.0 ? 0.95 * 2.0 / est : 1.0;
  }
  if (!(omega > 0.0)) throw std::invalid_argument("sirt: omega must be > 0");

  Vector x = initial_iterate(o, n);
  if (detail::has_constraints(o)) x = detail::project(x, o);
  Vector r = b - a.apply(x);
  for (Index it = 1; it <= rec.max_iter(); ++it) {
    x += omega * d1.cwiseProduct(a.apply_adjoint(d2.cwiseProduct(r)));
    if (detail::has_constraints(o)) x = detail::project(x, o);
    r = b - a.apply(x);
    const double rnrm = bn > 0.0 ? r.norm() / bn : 0.0;
    detail::require_finite(rnrm, "sirt");
    rec.record(x, rnrm);
    if (o.noise_level > 0.0 && rec.check(check_discrepancy(rnrm, o.noise_level, o.eta), x)) break;
  }
  return rec.finish(x);
}

}  // namespace regu
