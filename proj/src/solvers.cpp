#include "solver_common.hpp"

namespace regu {

RegParam default_reg_param(SolverId id, const SolveOptions& o) {
  (void)o;
  switch (id) {
    case SolverId::hybrid_lsqr: return RegParam::rule(RegParamKind::wgcv);
    case SolverId::hybrid_gmres:
    case SolverId::hybrid_fgmres:
    case SolverId::ell1: return RegParam::rule(RegParamKind::gcv);
    default: return RegParam::rule(RegParamKind::off);
  }
}

SolveResult solve(SolverId id, const LinearOperator& a, const Vector& b, const IterSet& k,
                  const SolveOptions& o) {
  switch (id) {
    case SolverId::cgls: return cgls(a, b, k, o);
    case SolverId::enrich: return enriched_cgls(a, b, k, o);
    case SolverId::rrgmres: return rrgmres(a, b, k, o);
    case SolverId::hybrid_lsqr: return hybrid_lsqr(a, b, k, o);
    case SolverId::hybrid_gmres: return hybrid_gmres(a, b, k, o);
    case SolverId::hybrid_fgmres:
    case SolverId::ell1: return hybrid_fgmres(a, b, k, o);
    case SolverId::fista: return fista(a, b, k, o);
    case SolverId::mrnsd: return mrnsd(a, b, k, o);
    case SolverId::art: return art(a, b, k, o);
    case SolverId::sirt: return sirt(a, b, k, o);
    case SolverId::restart: return restart(a, b, k, o);
    case SolverId::constr_ls: return constr_ls(a, b, k, o);
    case SolverId::htv: return htv(a, b, k, o);
    case SolverId::irn: return irn(a, b, k, o);
  }
  throw std::invalid_argument("unknown solver");
}

std::vector<std::pair<std::string, std::string>> solver_defaults(SolverId id) {
  const SolveOptions o;
  std::vector<std::pair<std::string, std::string>> d = {
      {"MaxIter", "100"},
      {"K", "auto"},
      {"NoiseLevel", "0"},
      {"eta", "1.01"},
      {"NoStop", "false"},
  };
  auto add = [&](const char* key, std::string value) { d.emplace_back(key, std::move(value)); };
  const bool constrained = id == SolverId::fista || id == SolverId::art || id == SolverId::sirt ||
                           id == SolverId::restart || id == SolverId::constr_ls ||
                           id == SolverId::htv || id == SolverId::irn;
  const bool hybrid = id == SolverId::hybrid_lsqr || id == SolverId::hybrid_gmres ||
                      id == SolverId::hybrid_fgmres || id == SolverId::ell1;
  const bool restarted = id == SolverId::restart || id == SolverId::constr_ls || id == SolverId::htv ||
                         id == SolverId::irn;

  if (restarted) {
    std::string inner = "cgls";
    if (id == SolverId::htv || id == SolverId::irn) inner = "hybrid_lsqr";
    add("RegParam", "auto");
    add("inner_solver", inner);
    add("NoStopOut", "false");
    add("stopOut", "xstab");
    add("stopOut_tol", "0.0001");
    add("stopOut_window", "2");
    if (id == SolverId::restart) add("restart_mode", "penalized");
  } else {
    add("RegParam", to_string(default_reg_param(id, o)));
  }
  if (id != SolverId::fista && id != SolverId::hybrid_fgmres && id != SolverId::ell1 &&
      id != SolverId::art && id != SolverId::sirt && id != SolverId::mrnsd && id != SolverId::htv &&
      id != SolverId::irn && id != SolverId::constr_ls) {
    add("RegMatrix", "identity");
  }
  if (id == SolverId::cgls || id == SolverId::fista || id == SolverId::mrnsd) add("NE_Rtol", "1e-12");
  if (hybrid || restarted) {
    add("gcv_window", "4");
    add("gcv_tol", "1e-06");
    add("wgcv_weight", "0.8");
  }
  if (hybrid || id == SolverId::enrich || id == SolverId::rrgmres || restarted) add("reorthogonalize", "true");
  if (id == SolverId::hybrid_fgmres || id == SolverId::ell1) add("flexible_weights", "true");
  if (constrained) {
    add("xMin", id == SolverId::constr_ls ? "0" : "none");
    add("xMax", "none");
    add("xEnergy", "none");
  }
  if (id == SolverId::fista) add("omega", "auto");
  if (id == SolverId::art) add("omega", "1");
  if (id == SolverId::sirt) {
    add("sirt_variant", "sart");
    add("omega", "auto");
  }
  if (id == SolverId::mrnsd) add("x0", "auto");
  if (id == SolverId::enrich) add("enrichment_basis", "constant");
  if (id == SolverId::htv) add("grid_rows", "auto");
  return d;
}

}  // namespace regu
