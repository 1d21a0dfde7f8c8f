#pragma once

#include "regu/linop.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace regu {

enum class Verdict { proceed, stop };

enum class StopReason {
  none,
  discrepancy,
  gcv_flat,
  gcv_increase,
  residual_stabilized,
  ne_residual,
  max_iter,
  breakdown,
  outer_stabilized,
};

const char* to_string(StopReason reason);

struct StoppingDecision {
  Verdict verdict = Verdict::proceed;
  StopReason reason = StopReason::none;
  double trigger_value = 0.0;

  bool stop() const { return verdict == Verdict::stop; }
  static StoppingDecision proceed(double value) { return {Verdict::proceed, StopReason::none, value}; }
  static StoppingDecision halt(StopReason why, double value) { return {Verdict::stop, why, value}; }
};

/// Stop iff rel_residual <= eta * noise_level.
StoppingDecision check_discrepancy(double rel_residual, double noise_level, double eta);

/// Stop iff ne_rel <= tol.
StoppingDecision check_ne_residual(double ne_rel, double tol);

/// Stop when the last `window` entries are non-decreasing (gcv_increase) or
/// their relative spread is below tol (gcv_flat). Needs at least `window`
/// entries.
StoppingDecision check_gcv_stop(std::span<const double> min_gcv_history, int window, double tol);

/// Stop when the relative change between consecutive entries over the last
/// `window` entries stays below tol.
StoppingDecision check_residual_stabilized(std::span<const double> history, int window, double tol);

/// Outer-iteration monitor for restarted methods; series holds one value per
/// restart (||x||, ||L x|| or lambda depending on the mode).
StoppingDecision check_outer_stabilization(std::span<const double> series, double tol = 1e-4,
                                           int window = 2);

// ---------------------------------------------------------------------------
// Projected problems and parameter choice
// ---------------------------------------------------------------------------

/// min_y ||R y - rhs|| with R of size (k+1) x k (bidiagonal or Hessenberg).
/// full_rows is the row count M of the original operator.
struct ProjectedProblem {
  Matrix r;
  Vector rhs;
  Index full_rows = 0;

  Index k() const { return r.cols(); }
};

/// SVD of R with the pieces Tikhonov filtering needs.
class ProjectedSvd {
public:
  explicit ProjectedSvd(const ProjectedProblem& proj);

  const Vector& singular_values() const { return sigma_; }
  double sigma_max() const { return sigma_.size() ? sigma_[0] : 0.0; }

  /// Tikhonov solution argmin ||R y - rhs||^2 + lambda^2 ||y||^2.
  Vector solve(double lambda) const;
  /// ||R y_lambda - rhs||.
  double residual_norm(double lambda) const;
  /// trace(R R^#(lambda)) = sum sigma^2 / (sigma^2 + lambda^2).
  double influence_trace(double lambda) const;

  Index k() const { return k_; }
  Index full_rows() const { return full_rows_; }

private:
  Index k_;
  Index full_rows_;
  Vector sigma_;
  Vector coeff_;        // U^T rhs
  Matrix v_;
  double perp2_ = 0.0;  // squared norm of rhs outside range(R)
};

enum class GcvVariant { standard, modified, weighted };

struct GcvSpec {
  GcvVariant variant = GcvVariant::standard;
  double weight = 1.0;  // used by the weighted variant
};

/// G(lambda) = ||R y_lambda - rhs|| / (Q - w trace(R R^#(lambda))) with
/// (Q, w) = (k+1, 1), (M-k, 1) or (k+1, weight). Returns +inf when the
/// denominator is not positive.
double gcv_function(const ProjectedProblem& proj, double lambda, GcvSpec spec);
double gcv_function(const ProjectedSvd& svd, double lambda, GcvSpec spec);

struct SecantResult {
  double lambda = 0.0;
  double phi = 0.0;  // discrepancy(lambda) - target
  int iterations = 0;
  bool converged = false;
};

/// Solves discrepancy(lambda) = target for lambda in [0, lambda_max] by the
/// secant method, starting from the given (lambda, discrepancy) history.
/// The discrepancy is assumed non-decreasing in lambda. When it already
/// exceeds the target at lambda = 0 no lambda can satisfy the principle and 0
/// is returned. Falls back to bisection on flat slopes or bracket exits.
SecantResult secant_lambda_update(std::span<const std::pair<double, double>> history,
                                  const std::function<double(double)>& discrepancy, double target,
                                  double lambda_max, int max_iterations = 100);

enum class LambdaRule { gcv, wgcv, modified_gcv, discrep };

const char* to_string(LambdaRule rule);

struct LambdaSpec {
  LambdaRule rule = LambdaRule::gcv;
  double wgcv_weight = 0.8;
  /// Discrepancy target in the units of ||R y - rhs||.
  double target = 0.0;
  /// Previous choice, used as secant seed.
  double previous = 0.0;
};

struct LambdaChoice {
  double lambda = 0.0;
  /// G(lambda) for GCV rules, discrepancy for discrep.
  double value = 0.0;
  bool fallback = false;
};

/// GCV rules: golden-section search of G over log(lambda) in
/// [1e-12 sigma_max, sigma_max], seeded by a coarse log-grid scan and refined
/// to relative width 1e-3. discrep: secant_lambda_update.
LambdaChoice choose_lambda(const ProjectedSvd& svd, const LambdaSpec& spec);
LambdaChoice choose_lambda(const ProjectedProblem& proj, const LambdaSpec& spec);

GcvSpec gcv_spec_for(const LambdaSpec& spec);

}  // namespace regu
