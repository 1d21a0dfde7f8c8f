#pragma once

#include "regu/solvers.hpp"

#include <set>

namespace regu::detail {

/// Bookkeeping shared by all iterative methods: norm histories, stored
/// iterates, stop and best snapshots.
class Recorder {
public:
  Recorder(const Vector& b, const IterSet& k, const SolveOptions& o);

  Index max_iter() const { return max_iter_; }
  Index its() const { return info_.its; }
  double b_norm() const { return b_norm_; }
  bool stopped() const { return info_.stop_reason != StopReason::none; }
  const std::vector<double>& rnrm() const { return info_.rnrm; }

  /// Logs iteration its()+1 with iterate x.
  void record(const Vector& x, double rnrm_rel, std::optional<double> ne_rel = std::nullopt,
              std::optional<double> lambda = std::nullopt);

  /// Applies a stopping decision to the latest iterate. Returns true when the
  /// caller should leave its loop.
  bool check(const StoppingDecision& d, const Vector& x);
  /// Same with an explicit snapshot (e.g. the best GCV iterate in a window).
  bool check(const StoppingDecision& d, const Vector& x, Index it);

  void warn(std::string w);

  SolveResult finish(const Vector& x_final, StopReason fallback = StopReason::max_iter);

private:
  const SolveOptions& o_;
  double b_norm_;
  double x_true_norm_ = 0.0;
  Index max_iter_;
  std::set<Index> keep_;
  std::vector<Vector> stored_;
  std::vector<Index> stored_its_;
  IterationInfo info_;
  double best_enrm_ = std::numeric_limits<double>::infinity();
};

Index resolve_max_iter(const IterSet& k, const SolveOptions& o);

void require_adjoint(const LinearOperator& a, const char* solver);
void require_square(const LinearOperator& a, const char* solver);
void require_finite(double v, const char* solver);

bool has_constraints(const SolveOptions& o);
Vector project(const Vector& x, const SolveOptions& o);

PriorconditionerPtr make_priorconditioner(const SolveOptions& o, Index n);

/// Lambda of a fixed/off parameter; throws for rules the solver cannot honour.
double fixed_lambda(const SolveOptions& o, const char* solver);

/// Appends q orthogonalized against the columns of basis (two classical
/// Gram-Schmidt passes when reorth is set, one modified pass otherwise),
/// writing the coefficients into h. Returns the remaining norm.
double orthogonalize(const std::vector<Vector>& basis, Vector& q, Vector& h, bool reorth);

}  // namespace regu::detail
