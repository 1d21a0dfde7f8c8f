#include "regu/stopping.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace regu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double relative_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(b - a) / scale : 0.0;
}

bool stabilized(std::span<const double> s, int window, double tol) {
  if (window < 2 || s.size() < static_cast<std::size_t>(window)) return false;
  const std::size_t first = s.size() - static_cast<std::size_t>(window);
  for (std::size_t i = first + 1; i < s.size(); ++i) {
    if (!(relative_change(s[i - 1], s[i]) < tol)) return false;
  }
  return true;
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::none: return "none";
    case StopReason::discrepancy: return "discrepancy";
    case StopReason::gcv_flat: return "gcv_flat";
    case StopReason::gcv_increase: return "gcv_increase";
    case StopReason::residual_stabilized: return "residual_stabilized";
    case StopReason::ne_residual: return "ne_residual";
    case StopReason::max_iter: return "max_iter";
    case StopReason::breakdown: return "breakdown";
    case StopReason::outer_stabilized: return "outer_stabilized";
  }
  return "unknown";
}

const char* to_string(LambdaRule rule) {
  switch (rule) {
    case LambdaRule::gcv: return "gcv";
    case LambdaRule::wgcv: return "wgcv";
    case LambdaRule::modified_gcv: return "modified_gcv";
    case LambdaRule::discrep: return "discrep";
  }
  return "unknown";
}

StoppingDecision check_discrepancy(double rel_residual, double noise_level, double eta) {
  if (rel_residual <= eta * noise_level) return StoppingDecision::halt(StopReason::discrepancy, rel_residual);
  return StoppingDecision::proceed(rel_residual);
}

StoppingDecision check_ne_residual(double ne_rel, double tol) {
  if (ne_rel <= tol) return StoppingDecision::halt(StopReason::ne_residual, ne_rel);
  return StoppingDecision::proceed(ne_rel);
}

StoppingDecision check_gcv_stop(std::span<const double> h, int window, double tol) {
  if (window < 2) throw std::invalid_argument("check_gcv_stop: window must be >= 2");
  if (h.size() < static_cast<std::size_t>(window)) return StoppingDecision::proceed(h.empty() ? 0.0 : h.back());
  const double last = h.back();
  const auto tail = h.subspan(h.size() - static_cast<std::size_t>(window));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  if (scale == 0.0 || (*hi - *lo) / scale < tol) return StoppingDecision::halt(StopReason::gcv_flat, last);
  if (std::is_sorted(tail.begin(), tail.end())) return StoppingDecision::halt(StopReason::gcv_increase, last);
  return StoppingDecision::proceed(last);
}

StoppingDecision check_residual_stabilized(std::span<const double> h, int window, double tol) {
  const double last = h.empty() ? 0.0 : h.back();
  if (stabilized(h, window, tol)) return StoppingDecision::halt(StopReason::residual_stabilized, last);
  return StoppingDecision::proceed(last);
}

StoppingDecision check_outer_stabilization(std::span<const double> series, double tol, int window) {
  const double last = series.empty() ? 0.0 : series.back();
  if (stabilized(series, window, tol)) return StoppingDecision::halt(StopReason::outer_stabilized, last);
  return StoppingDecision::proceed(last);
}

// ---------------------------------------------------------------------------
// Projected SVD and GCV
// ---------------------------------------------------------------------------

ProjectedSvd::ProjectedSvd(const ProjectedProblem& proj)
    : k_(proj.r.cols()), full_rows_(proj.full_rows) {
  if (proj.r.rows() < proj.r.cols()) throw DimensionError("projected matrix must have rows >= cols");
  check_length(proj.rhs, proj.r.rows(), "projected rhs");
  Eigen::JacobiSVD<Matrix> svd(proj.r, Eigen::ComputeFullU | Eigen::ComputeThinV);
  sigma_ = svd.singularValues();
  v_ = svd.matrixV();
  const Vector all = svd.matrixU().transpose() * proj.rhs;
  coeff_ = all.head(k_);
  perp2_ = all.tail(all.size() - k_).squaredNorm();
}

Vector ProjectedSvd::solve(double lambda) const {
  const double l2 = lambda * lambda;
  Vector w(k_);
  for (Index i = 0; i < k_; ++i) {
    const double s = sigma_[i];
    const double d = s * s + l2;
    w[i] = d > 0.0 ? s * coeff_[i] / d : 0.0;
  }
  return v_ * w;
}

double ProjectedSvd::residual_norm(double lambda) const {
  const double l2 = lambda * lambda;
  double sum = perp2_;
  for (Index i = 0; i < k_; ++i) {
    const double s2 = sigma_[i] * sigma_[i];
    const double d = s2 + l2;
    const double keep = d > 0.0 ? l2 / d : 1.0;
    sum += keep * keep * coeff_[i] * coeff_[i];
  }
  return std::sqrt(sum);
}

double ProjectedSvd::influence_trace(double lambda) const {
  const double l2 = lambda * lambda;
  double t = 0.0;
  for (Index i = 0; i < k_; ++i) {
    const double s2 = sigma_[i] * sigma_[i];
    const double d = s2 + l2;
    if (d > 0.0) t += s2 / d;
  }
  return t;
}

double gcv_function(const ProjectedSvd& svd, double lambda, GcvSpec spec) {
  if (lambda < 0.0) throw std::invalid_argument("gcv_function: lambda must be >= 0");
  double q = static_cast<double>(svd.k() + 1);
  double w = 1.0;
  switch (spec.variant) {
    case GcvVariant::standard: break;
    case GcvVariant::modified:
      if (svd.full_rows() <= svd.k()) throw std::invalid_argument("modified GCV needs M > k");
      q = static_cast<double>(svd.full_rows() - svd.k());
      break;
    case GcvVariant::weighted: w = spec.weight; break;
  }
  const double denom = q - w * svd.influence_trace(lambda);
  if (!(denom > 0.0)) return kInf;
  return svd.residual_norm(lambda) / denom;
}

double gcv_function(const ProjectedProblem& proj, double lambda, GcvSpec spec) {
  return gcv_function(ProjectedSvd(proj), lambda, spec);
}

GcvSpec gcv_spec_for(const LambdaSpec& spec) {
  switch (spec.rule) {
    case LambdaRule::gcv: return {GcvVariant::standard, 1.0};
    case LambdaRule::wgcv: return {GcvVariant::weighted, spec.wgcv_weight};
    case LambdaRule::modified_gcv: return {GcvVariant::modified, 1.0};
    case LambdaRule::discrep: break;
  }
  throw std::invalid_argument("gcv_spec_for: discrepancy rule has no GCV variant");
}

// ---------------------------------------------------------------------------
// Secant update
// ---------------------------------------------------------------------------

SecantResult secant_lambda_update(std::span<const std::pair<double, double>> history,
                                  const std::function<double(double)>& discrepancy, double target,
                                  double lambda_max, int max_iterations) {
  if (history.empty()) throw std::invalid_argument("secant_lambda_update: empty history");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("secant_lambda_update: lambda_max must be > 0");
  const double tol = 1e-4 * target;
  SecantResult out;

  const double f_zero = discrepancy(0.0) - target;
  if (f_zero >= 0.0) {
    out.lambda = 0.0;
    out.phi = f_zero;
    out.converged = true;
    return out;
  }
  const double f_max = discrepancy(lambda_max) - target;
  if (f_max <= 0.0) {
    out.lambda = lambda_max;
    out.phi = f_max;
    out.converged = std::abs(f_max) <= tol;
    return out;
  }

  double lo = 0.0, hi = lambda_max;
  double f_lo = f_zero, f_hi = f_max;
  auto bracket = [&](double l, double f) {
    if (f < 0.0 && l > lo) { lo = l; f_lo = f; }
    if (f > 0.0 && l < hi) { hi = l; f_hi = f; }
  };

  double l0, f0, l1, f1;
  for (const auto& [l, d] : history) bracket(std::clamp(l, 0.0, lambda_max), d - target);
  l1 = std::clamp(history.back().first, 0.0, lambda_max);
  f1 = history.back().second - target;
  if (std::abs(f1) <= tol) return {l1, f1, 0, true};
  if (history.size() >= 2) {
    l0 = std::clamp(history[history.size() - 2].first, 0.0, lambda_max);
    f0 = history[history.size() - 2].second - target;
  } else if (l1 > 0.0) {
    l0 = 0.0;
    f0 = f_zero;
  } else {
    l0 = lambda_max;
    f0 = f_max;
  }

  double best_l = l1, best_f = f1;
  for (int it = 1; it <= max_iterations; ++it) {
    double cand = std::numeric_limits<double>::quiet_NaN();
    const double slope = f1 - f0;
    if (std::abs(slope) > 1e-14 * std::max(std::abs(f1), std::abs(f0)) && l1 != l0) {
      cand = l1 - f1 * (l1 - l0) / slope;
    }
    if (!(cand > lo && cand < hi)) {
      cand = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    }
    const double fc = discrepancy(cand) - target;
    bracket(cand, fc);
    l0 = l1;
    f0 = f1;
    l1 = cand;
    f1 = fc;
    out.iterations = it;
    if (std::abs(fc) < std::abs(best_f)) {
      best_l = cand;
      best_f = fc;
    }
    if (std::abs(fc) <= tol) {
      out.converged = true;
      break;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  out.lambda = best_l;
  out.phi = best_f;
  return out;
}

// ---------------------------------------------------------------------------
// Parameter choice
// ---------------------------------------------------------------------------

LambdaChoice choose_lambda(const ProjectedSvd& svd, const LambdaSpec& spec) {
  LambdaChoice out;
  const double smax = svd.sigma_max();

  if (spec.rule == LambdaRule::discrep) {
    auto disc = [&](double l) { return svd.residual_norm(l); };
    const double lmax = smax > 0.0 ? 1e6 * smax : 1.0;
    std::vector<std::pair<double, double>> hist;
    if (spec.previous > 0.0) hist.emplace_back(spec.previous, disc(spec.previous));
    else hist.emplace_back(smax > 0.0 ? smax : 1.0, disc(smax > 0.0 ? smax : 1.0));
    const SecantResult r = secant_lambda_update(hist, disc, spec.target, lmax);
    out.lambda = r.lambda;
    out.value = disc(r.lambda);
    return out;
  }

  const GcvSpec g = gcv_spec_for(spec);
  if (!(smax > 0.0)) {
    out.fallback = true;
    out.value = gcv_function(svd, 0.0, g);
    return out;
  }
  const double t_lo = std::log(1e-12 * smax);
  const double t_hi = std::log(smax);
  auto eval = [&](double t) { return gcv_function(svd, std::exp(t), g); };

  constexpr int kGrid = 1000;
  int best = -1;
  double best_g = kInf;
  for (int i = 0; i < kGrid; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (kGrid - 1);
    const double gi = eval(t);
    if (std::isfinite(gi) && gi < best_g) {
      best_g = gi;
      best = i;
    }
  }
  if (best < 0) {
    out.fallback = true;
    out.lambda = 0.0;
    out.value = gcv_function(svd, 0.0, g);
    return out;
  }
  const double step = (t_hi - t_lo) / (kGrid - 1);
  double a = t_lo + step * std::max(best - 1, 0);
  double b = t_lo + step * std::min(best + 1, kGrid - 1);
  double best_t = t_lo + step * best;

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double gc = eval(c), gd = eval(d);
  while (b - a > 1e-3) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = eval(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = eval(d);
    }
  }
  const double t_mid = 0.5 * (a + b);
  const double g_mid = eval(t_mid);
  if (g_mid <= best_g) {
    best_t = t_mid;
    best_g = g_mid;
  }
  out.lambda = std::exp(best_t);
  out.value = best_g;
  return out;
}

LambdaChoice choose_lambda(const ProjectedProblem& proj, const LambdaSpec& spec) {
  return choose_lambda(ProjectedSvd(proj), spec);
}

}  // namespace regu
