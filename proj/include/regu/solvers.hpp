#pragma once

#include "regu/linop.hpp"
#include "regu/regmat.hpp"
#include "regu/stopping.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regu {

/// Raised for failures inside an iteration (non-finite products, inner solver
/// errors in restarted methods).
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SolverId {
  cgls,
  enrich,
  rrgmres,
  hybrid_lsqr,
  hybrid_gmres,
  hybrid_fgmres,
  ell1,
  fista,
  mrnsd,
  art,
  sirt,
  restart,
  constr_ls,
  htv,
  irn,
};

const char* to_string(SolverId id);
SolverId solver_from_string(const std::string& name);
std::vector<SolverId> all_solvers();

enum class RegParamKind { fixed, gcv, wgcv, modified_gcv, discrep, off };

struct RegParam {
  RegParamKind kind = RegParamKind::off;
  double value = 0.0;  // lambda for fixed

  static RegParam fixed(double lambda) { return {RegParamKind::fixed, lambda}; }
  static RegParam rule(RegParamKind k) { return {k, 0.0}; }
};

std::string to_string(const RegParam& p);
/// Parses "gcv", "wgcv", "modified_gcv", "discrep", "off" or a number.
RegParam reg_param_from_string(const std::string& text);

enum class StopOut { xstab, Lxstab, regPstab };
const char* to_string(StopOut s);
StopOut stop_out_from_string(const std::string& name);

enum class SirtVariant { sart, cimmino, landweber };
const char* to_string(SirtVariant v);
SirtVariant sirt_variant_from_string(const std::string& name);

enum class RestartMode { penalized, projected, penalized_projected };
const char* to_string(RestartMode m);
RestartMode restart_mode_from_string(const std::string& name);

struct SolveOptions {
  std::optional<Vector> x_true;
  double noise_level = 0.0;
  double eta = 1.01;
  /// Empty means the solver's own default rule.
  std::optional<RegParam> reg_param;
  /// Empty means L = I.
  std::optional<RegularizationMatrix> reg_matrix;
  Index max_iter = 100;
  bool no_stop = false;
  bool no_stop_out = false;
  double ne_rtol = 1e-12;
  StopOut stop_out = StopOut::xstab;
  double stop_out_tol = 1e-4;
  int stop_out_window = 2;
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::optional<double> x_energy;
  std::optional<double> omega;
  std::optional<Matrix> enrichment_basis;
  std::optional<SolverId> inner_solver;
  RestartMode restart_mode = RestartMode::penalized;
  int gcv_window = 4;
  double gcv_tol = 1e-6;
  double wgcv_weight = 0.8;
  bool reorthogonalize = true;
  /// hybrid_fgmres: false keeps the identity preconditioner at every step.
  bool flexible_weights = true;
  SirtVariant sirt_variant = SirtVariant::sart;
  std::optional<Vector> x0;
  /// Side length of the square image for htv; 0 infers sqrt(N).
  Index grid_rows = 0;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct Snapshot {
  Vector x;
  Index it = 0;
};

struct IterationInfo {
  std::vector<double> enrm;
  std::vector<double> rnrm;
  std::vector<double> ne_rnrm;
  std::vector<double> reg_p;
  Index its = 0;
  StopReason stop_reason = StopReason::none;
  std::string stop_flag;
  Snapshot stop_reg;
  Snapshot best_reg;
  std::vector<std::string> warnings;
};

struct SolveResult {
  /// Iterates at the requested indices, one per column.
  Matrix x;
  /// Iteration number of each stored column.
  std::vector<Index> stored;
  IterationInfo info;
};

/// K lists the iterations to store; empty means {max_iter}. When K is given,
/// max_iter is taken as max(K).
using IterSet = std::vector<Index>;

SolveResult cgls(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult enriched_cgls(const LinearOperator& a, const Vector& b, const IterSet& k,
                          const SolveOptions& o);
SolveResult rrgmres(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult hybrid_lsqr(const LinearOperator& a, const Vector& b, const IterSet& k,
                        const SolveOptions& o);
SolveResult hybrid_gmres(const LinearOperator& a, const Vector& b, const IterSet& k,
                         const SolveOptions& o);
SolveResult hybrid_fgmres(const LinearOperator& a, const Vector& b, const IterSet& k,
                          const SolveOptions& o);
SolveResult fista(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult mrnsd(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult art(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult sirt(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult restart(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult constr_ls(const LinearOperator& a, const Vector& b, const IterSet& k,
                      const SolveOptions& o);
SolveResult htv(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);
SolveResult irn(const LinearOperator& a, const Vector& b, const IterSet& k, const SolveOptions& o);

SolveResult solve(SolverId id, const LinearOperator& a, const Vector& b, const IterSet& k,
                  const SolveOptions& o);

/// Default option values of a solver as printable key/value pairs.
std::vector<std::pair<std::string, std::string>> solver_defaults(SolverId id);

/// Default regularization-parameter rule of a solver.
RegParam default_reg_param(SolverId id, const SolveOptions& o);

/// Euclidean projection onto {xMin <= x <= xMax} intersected with
/// {x >= 0, sum x = xEnergy} when an energy is given. Without constraints the
/// input is returned unchanged.
Vector project_constraints(const Vector& x, std::optional<double> x_min, std::optional<double> x_max,
                           std::optional<double> x_energy);

/// Projection onto {lo <= x <= hi, sum x = energy}.
Vector project_energy(const Vector& x, double energy, double lo = 0.0,
                      double hi = std::numeric_limits<double>::infinity());

/// Power-iteration estimate of ||A||_2^2.
double estimate_norm2_squared(const LinearOperator& a, int steps, std::uint64_t seed = 7);

}  // namespace regu
