#include "solver_common.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace regu {

namespace detail {

Index resolve_max_iter(const IterSet& k, const SolveOptions& o) {
  if (k.empty()) return o.max_iter;
  for (Index v : k) {
    if (v < 1) throw std::invalid_argument("iteration indices in K must be >= 1");
  }
  return *std::max_element(k.begin(), k.end());
}

Recorder::Recorder(const Vector& b, const IterSet& k, const SolveOptions& o)
    : o_(o), b_norm_(b.norm()), max_iter_(resolve_max_iter(k, o)) {
  o.validate();
  if (k.empty()) keep_.insert(max_iter_);
  else keep_.insert(k.begin(), k.end());
  if (o.x_true) x_true_norm_ = o.x_true->norm();
}

void Recorder::record(const Vector& x, double rnrm_rel, std::optional<double> ne_rel,
                      std::optional<double> lambda) {
  ++info_.its;
  const Index it = info_.its;
  info_.rnrm.push_back(rnrm_rel);
  if (ne_rel) info_.ne_rnrm.push_back(*ne_rel);
  if (lambda) info_.reg_p.push_back(*lambda);
  if (o_.x_true) {
    check_length(x, o_.x_true->size(), "iterate vs x_true");
    const double e = (*o_.x_true - x).norm() / (x_true_norm_ > 0.0 ? x_true_norm_ : 1.0);
    info_.enrm.push_back(e);
    if (e < best_enrm_) {
      best_enrm_ = e;
      info_.best_reg = {x, it};
    }
  }
  if (keep_.count(it)) {
    stored_.push_back(x);
    stored_its_.push_back(it);
  }
}

bool Recorder::check(const StoppingDecision& d, const Vector& x) { return check(d, x, info_.its); }

bool Recorder::check(const StoppingDecision& d, const Vector& x, Index it) {
  if (!d.stop()) return false;
  if (!stopped()) {
    info_.stop_reason = d.reason;
    info_.stop_flag = to_string(d.reason);
    info_.stop_reg = {x, it};
  }
  return !o_.no_stop || d.reason == StopReason::breakdown;
}

void Recorder::warn(std::string w) {
  if (std::find(info_.warnings.begin(), info_.warnings.end(), w) == info_.warnings.end()) {
    info_.warnings.push_back(std::move(w));
  }
}

SolveResult Recorder::finish(const Vector& x_final, StopReason fallback) {
  if (!stopped()) {
    info_.stop_reason = fallback;
    info_.stop_flag = to_string(fallback);
    info_.stop_reg = {x_final, info_.its};
  }
  if (info_.its < max_iter_ && (stored_its_.empty() || stored_its_.back() != info_.its)) {
    stored_.push_back(x_final);
    stored_its_.push_back(info_.its);
  }
  SolveResult r;
  r.x.resize(x_final.size(), static_cast<Index>(stored_.size()));
  for (std::size_t j = 0; j < stored_.size(); ++j) r.x.col(static_cast<Index>(j)) = stored_[j];
  r.stored = stored_its_;
  r.info = std::move(info_);
  return r;
}

void require_adjoint(const LinearOperator& a, const char* solver) {
  if (!a.has_adjoint()) {
    throw AdjointUnavailable();
  }
  (void)solver;
}

void require_square(const LinearOperator& a, const char* solver) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(solver) + " requires a square operator");
  }
}

void require_finite(double v, const char* solver) {
  if (!std::isfinite(v)) {
    throw SolverError(std::string(solver) + ": non-finite value in operator product");
  }
}

bool has_constraints(const SolveOptions& o) {
  return o.x_min.has_value() || o.x_max.has_value() || o.x_energy.has_value();
}

Vector project(const Vector& x, const SolveOptions& o) {
  return project_constraints(x, o.x_min, o.x_max, o.x_energy);
}

PriorconditionerPtr make_priorconditioner(const SolveOptions& o, Index n) {
  if (!o.reg_matrix) return Priorconditioner::identity(n);
  if (o.reg_matrix->matrix.cols != n) {
    throw DimensionError("regularization matrix columns do not match operator columns");
  }
  return Priorconditioner::create(*o.reg_matrix);
}

double fixed_lambda(const SolveOptions& o, const char* solver) {
  if (!o.reg_param) return 0.0;
  switch (o.reg_param->kind) {
    case RegParamKind::off: return 0.0;
    case RegParamKind::fixed: return o.reg_param->value;
    default: break;
  }
  throw std::invalid_argument(std::string(solver) + " supports only a fixed regularization parameter");
}

double orthogonalize(const std::vector<Vector>& basis, Vector& q, Vector& h, bool reorth) {
  const Index k = static_cast<Index>(basis.size());
  h = Vector::Zero(k);
  if (reorth) {
    for (int pass = 0; pass < 2; ++pass) {
      Vector c(k);
      for (Index j = 0; j < k; ++j) c[j] = basis[j].dot(q);
      for (Index j = 0; j < k; ++j) q -= c[j] * basis[j];
      h += c;
    }
  } else {
    for (Index j = 0; j < k; ++j) {
      const double c = basis[j].dot(q);
      q -= c * basis[j];
      h[j] = c;
    }
  }
  return q.norm();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

namespace {

struct SolverName {
  SolverId id;
  const char* name;
};

constexpr SolverName kSolverNames[] = {
    {SolverId::cgls, "cgls"},
    {SolverId::enrich, "enrich"},
    {SolverId::rrgmres, "rrgmres"},
    {SolverId::hybrid_lsqr, "hybrid_lsqr"},
    {SolverId::hybrid_gmres, "hybrid_gmres"},
    {SolverId::hybrid_fgmres, "hybrid_fgmres"},
    {SolverId::ell1, "ell1"},
    {SolverId::fista, "fista"},
    {SolverId::mrnsd, "mrnsd"},
    {SolverId::art, "art"},
    {SolverId::sirt, "sirt"},
    {SolverId::restart, "restart"},
    {SolverId::constr_ls, "constr_ls"},
    {SolverId::htv, "htv"},
    {SolverId::irn, "irn"},
};

}  // namespace

const char* to_string(SolverId id) {
  for (const auto& s : kSolverNames) {
    if (s.id == id) return s.name;
  }
  return "unknown";
}

SolverId solver_from_string(const std::string& name) {
  for (const auto& s : kSolverNames) {
    if (name == s.name) return s.id;
  }
  throw std::invalid_argument("unknown solver id '" + name + "'");
}

std::vector<SolverId> all_solvers() {
  std::vector<SolverId> out;
  for (const auto& s : kSolverNames) out.push_back(s.id);
  return out;
}

std::string to_string(const RegParam& p) {
  switch (p.kind) {
    case RegParamKind::fixed: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", p.value);
      return buf;
    }
    case RegParamKind::gcv: return "gcv";
    case RegParamKind::wgcv: return "wgcv";
    case RegParamKind::modified_gcv: return "modified_gcv";
    case RegParamKind::discrep: return "discrep";
    case RegParamKind::off: return "off";
  }
  return "off";
}

RegParam reg_param_from_string(const std::string& text) {
  if (text == "gcv") return RegParam::rule(RegParamKind::gcv);
  if (text == "wgcv") return RegParam::rule(RegParamKind::wgcv);
  if (text == "modified_gcv") return RegParam::rule(RegParamKind::modified_gcv);
  if (text == "discrep") return RegParam::rule(RegParamKind::discrep);
  if (text == "off") return RegParam::rule(RegParamKind::off);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !(v >= 0.0)) {
    throw std::invalid_argument("invalid RegParam '" + text + "'");
  }
  return RegParam::fixed(v);
}

const char* to_string(StopOut s) {
  switch (s) {
    case StopOut::xstab: return "xstab";
    case StopOut::Lxstab: return "Lxstab";
    case StopOut::regPstab: return "regPstab";
  }
  return "xstab";
}

StopOut stop_out_from_string(const std::string& name) {
  if (name == "xstab") return StopOut::xstab;
  if (name == "Lxstab") return StopOut::Lxstab;
  if (name == "regPstab") return StopOut::regPstab;
  throw std::invalid_argument("invalid stopOut '" + name + "'");
}

const char* to_string(SirtVariant v) {
  switch (v) {
    case SirtVariant::sart: return "sart";
    case SirtVariant::cimmino: return "cimmino";
    case SirtVariant::landweber: return "landweber";
  }
  return "sart";
}

SirtVariant sirt_variant_from_string(const std::string& name) {
  if (name == "sart") return SirtVariant::sart;
  if (name == "cimmino") return SirtVariant::cimmino;
  if (name == "landweber") return SirtVariant::landweber;
  throw std::invalid_argument("invalid sirt variant '" + name + "'");
}

const char* to_string(RestartMode m) {
  switch (m) {
    case RestartMode::penalized: return "penalized";
    case RestartMode::projected: return "projected";
    case RestartMode::penalized_projected: return "penalized_projected";
  }
  return "penalized";
}

RestartMode restart_mode_from_string(const std::string& name) {
  if (name == "penalized") return RestartMode::penalized;
  if (name == "projected") return RestartMode::projected;
  if (name == "penalized_projected") return RestartMode::penalized_projected;
  throw std::invalid_argument("invalid restart mode '" + name + "'");
}

void SolveOptions::validate() const {
  if (!(eta >= 1.0)) throw std::invalid_argument("eta must be >= 1");
  if (max_iter < 1) throw std::invalid_argument("MaxIter must be >= 1");
  if (!(noise_level >= 0.0 && noise_level < 1.0)) {
    throw std::invalid_argument("NoiseLevel must lie in [0, 1)");
  }
  if (x_min && x_max && !(*x_min < *x_max)) throw std::invalid_argument("xMin must be < xMax");
  if (x_energy && !(*x_energy > 0.0)) throw std::invalid_argument("xEnergy must be > 0");
  if (gcv_window < 2) throw std::invalid_argument("gcv_window must be >= 2");
  if (reg_param && reg_param->kind == RegParamKind::fixed && !(reg_param->value >= 0.0)) {
    throw std::invalid_argument("fixed RegParam must be >= 0");
  }
  if (reg_param && reg_param->kind == RegParamKind::discrep && !(noise_level > 0.0)) {
    throw std::invalid_argument("discrepancy rule requires NoiseLevel > 0");
  }
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

Vector project_energy(const Vector& x, double energy, double lo, double hi) {
  const Index n = x.size();
  if (!(energy > 0.0)) throw std::invalid_argument("xEnergy must be > 0");
  if (n == 0) throw DimensionError("energy projection of an empty vector");
  if (!(n * lo <= energy && energy <= n * hi)) {
    throw std::invalid_argument("energy constraint incompatible with the box bounds");
  }
  Vector out(n);
  if (std::isinf(hi)) {
    // Sorted-threshold projection onto the shifted simplex {x >= lo, sum x = energy}.
    std::vector<double> v(x.data(), x.data() + n);
    for (double& t : v) t -= lo;
    const double target = energy - n * lo;
    std::sort(v.begin(), v.end(), std::greater<double>());
    double cum = 0.0;
    double theta = 0.0;
    for (Index i = 0; i < n; ++i) {
      cum += v[i];
      const double t = (cum - target) / static_cast<double>(i + 1);
      if (i + 1 == n || v[i + 1] <= t) {
        theta = t;
        break;
      }
    }
    for (Index i = 0; i < n; ++i) out[i] = lo + std::max(x[i] - lo - theta, 0.0);
  } else {
    // Bisection on the shift, then an exact solve on the final active set.
    auto sum_at = [&](double t) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) s += std::clamp(x[i] - t, lo, hi);
      return s;
    };
    double a = x.minCoeff() - hi;
    double b = x.maxCoeff() - lo;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
      const double m = 0.5 * (a + b);
      if (sum_at(m) > energy) a = m;
      else b = m;
    }
    double theta = 0.5 * (a + b);
    double fixed_sum = 0.0, free_sum = 0.0;
    Index free = 0;
    for (Index i = 0; i < n; ++i) {
      const double v = x[i] - theta;
      if (v <= lo) fixed_sum += lo;
      else if (v >= hi) fixed_sum += hi;
      else {
        free_sum += x[i];
        ++free;
      }
    }
    if (free > 0) theta = (free_sum + fixed_sum - energy) / static_cast<double>(free);
    for (Index i = 0; i < n; ++i) out[i] = std::clamp(x[i] - theta, lo, hi);
  }
  return out;
}

Vector project_constraints(const Vector& x, std::optional<double> x_min, std::optional<double> x_max,
                           std::optional<double> x_energy) {
  if (x_energy) {
    const double lo = std::max(x_min.value_or(0.0), 0.0);
    const double hi = x_max.value_or(std::numeric_limits<double>::infinity());
    return project_energy(x, *x_energy, lo, hi);
  }
  if (!x_min && !x_max) return x;
  const double lo = x_min.value_or(-std::numeric_limits<double>::infinity());
  const double hi = x_max.value_or(std::numeric_limits<double>::infinity());
  return x.cwiseMax(lo).cwiseMin(hi);
}

double estimate_norm2_squared(const LinearOperator& a, int steps, std::uint64_t seed) {
  detail::require_adjoint(a, "power iteration");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = nd(gen);
  v.normalize();
  double est = 0.0;
  for (int s = 0; s < std::max(steps, 1); ++s) {
    Vector w = a.apply_adjoint(a.apply(v));
    est = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    est = std::max(est, 0.0);
  }
  return est;
}

}  // namespace regu
