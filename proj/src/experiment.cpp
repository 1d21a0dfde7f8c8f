#include "regu/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace regu {

namespace fs = std::filesystem;

ConfigError::ConfigError(std::string block, const std::string& message)
    : std::runtime_error("[" + block + "] " + message), block_(std::move(block)) {}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_unset(const std::string& v) {
  const std::string l = lower(v);
  return l == "auto" || l == "none" || l.empty();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Typed access to a block of raw options
// ---------------------------------------------------------------------------

class Reader {
public:
  Reader(std::string block, const OptionMap& raw) : block_(std::move(block)), raw_(raw) {}

  const std::string* find(const std::string& key) {
    used_.push_back(key);
    auto it = raw_.find(key);
    return it == raw_.end() || is_unset(it->second) ? nullptr : &it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    const std::string* v = find(key);
    return v ? *v : fallback;
  }

  double real(const std::string& key, double fallback) {
    const std::string* v = find(key);
    return v ? parse_real(key, *v) : fallback;
  }

  std::optional<double> opt_real(const std::string& key) {
    const std::string* v = find(key);
    return v ? std::optional<double>(parse_real(key, *v)) : std::nullopt;
  }

  Index integer(const std::string& key, Index fallback) {
    const std::string* v = find(key);
    return v ? parse_integer(key, *v) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    const std::string l = lower(*v);
    if (l == "true" || l == "on" || l == "yes" || l == "1") return true;
    if (l == "false" || l == "off" || l == "no" || l == "0") return false;
    fail(key + ": expected a boolean, got '" + *v + "'");
  }

  std::pair<double, double> interval(const std::string& key, std::pair<double, double> fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    const std::vector<double> vals = reals(key, *v);
    if (vals.size() != 2) fail(key + ": expected [left, right]");
    return {vals[0], vals[1]};
  }

  /// Comma-separated items, optionally bracketed; an item may be a
  /// start:step:stop range.
  std::vector<double> reals(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[' && t.back() == ']') t = trim(t.substr(1, t.size() - 2));
    std::vector<double> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(key + ": empty list item");
      if (item.find(':') == std::string::npos) {
        out.push_back(parse_real(key, item));
        continue;
      }
      std::vector<double> parts;
      std::stringstream rs(item);
      std::string part;
      while (std::getline(rs, part, ':')) parts.push_back(parse_real(key, trim(part)));
      if (parts.size() != 3 || !(parts[1] != 0.0)) fail(key + ": expected start:step:stop");
      const double count = std::floor((parts[2] - parts[0]) / parts[1] + 1e-9);
      if (count < 0.0 || count > 1e7) fail(key + ": empty or oversized range");
      for (Index i = 0; i <= static_cast<Index>(count); ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
    }
    return out;
  }

  std::uint64_t seed(const std::string& key) {
    const Index s = integer(key, 0);
    if (s < 0) fail(key + ": seeds must be nonnegative");
    return static_cast<std::uint64_t>(s);
  }

  template <class F>
  auto parse_enum(const std::string& key, const std::string& fallback, F&& from_string) {
    const std::string v = str(key, fallback);
    try {
      return from_string(v);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [k, v] : raw_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) fail("unknown option '" + k + "'");
    }
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(block_, message); }

private:
  double parse_real(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
      fail(key + ": expected a number, got '" + v + "'");
    }
    return d;
  }

  Index parse_integer(const std::string& key, const std::string& v) const {
    const double d = parse_real(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e15) fail(key + ": expected an integer, got '" + v + "'");
    return static_cast<Index>(d);
  }

  std::string block_;
  const OptionMap& raw_;
  std::vector<std::string> used_;
};

Index guardrail(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::blur: return 1024;
    case ProblemKind::invinterp2: return 512;
    case ProblemKind::diffusion: return 256;
    case ProblemKind::nmr: return 512;
    case ProblemKind::tomo: return 512;
    case ProblemKind::identity: return 2048;
  }
  return 0;
}

Index checked_size(Reader& r, const std::string& key, Index fallback, ProblemKind kind, Index min) {
  const Index n = r.integer(key, fallback);
  if (n < min || n > guardrail(kind)) {
    r.fail(key + " must lie in [" + std::to_string(min) + ", " + std::to_string(guardrail(kind)) + "]");
  }
  return n;
}

std::string format_interval(const std::pair<double, double>& v) {
  return "[" + fmt_short(v.first) + ", " + fmt_short(v.second) + "]";
}

}  // namespace

// ---------------------------------------------------------------------------
// INI parsing
// ---------------------------------------------------------------------------

std::vector<IniSection> parse_ini(std::istream& in) {
  std::vector<IniSection> sections;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config", "line " + std::to_string(number) + ": unterminated header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", "line " + std::to_string(number) + ": expected key = value");
    }
    if (sections.empty()) {
      throw ConfigError("config", "line " + std::to_string(number) + ": option outside of a section");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(sections.back().name, "line " + std::to_string(number) + ": empty key");
    sections.back().entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return sections;
}

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> problem_defaults(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::blur: {
      const BlurOptions o;
      return {{"n", std::to_string(o.n)},
              {"psf", to_string(o.psf)},
              {"blur_level", to_string(o.level)},
              {"boundary", to_string(o.boundary)},
              {"commit_crime", o.commit_crime ? "true" : "false"},
              {"phantom", to_string(o.phantom)},
              {"seed", std::to_string(o.seed)}};
    }
    case ProblemKind::invinterp2: {
      const InvInterpOptions o;
      return {{"n", std::to_string(o.n)}, {"method", to_string(o.method)}, {"seed", std::to_string(o.seed)}};
    }
    case ProblemKind::diffusion: {
      const DiffusionOptions o;
      return {{"n", std::to_string(o.n)}, {"TFinal", fmt_short(o.t_final)}, {"Tsteps", std::to_string(o.t_steps)}};
    }
    case ProblemKind::nmr: {
      const NmrOptions o;
      return {{"n1", std::to_string(o.n1)},
              {"n2", std::to_string(o.n2)},
              {"m1", std::to_string(2 * o.n1)},
              {"m2", std::to_string(2 * o.n2)},
              {"Tloglimits", format_interval(o.t_log_limits)},
              {"tauloglimits", format_interval(o.tau_log_limits)},
              {"material", o.material}};
    }
    case ProblemKind::tomo: {
      const TomoOptions o;
      return {{"n", std::to_string(o.n)},
              {"angles", "0:1:179"},
              {"rays", std::to_string(std::llround(std::sqrt(2.0) * static_cast<double>(o.n)))},
              {"phantom", to_string(o.phantom)},
              {"seed", std::to_string(o.seed)}};
    }
    case ProblemKind::identity:
      return {{"n", "64"}, {"phantom", to_string(PhantomKind::shepplike)}, {"seed", "0"}};
  }
  return {};
}

TestProblem build_problem(ProblemKind kind, const OptionMap& options) {
  Reader r("problem", options);
  r.find("kind");
  TestProblem p;
  try {
    switch (kind) {
      case ProblemKind::blur: {
        BlurOptions o;
        o.n = checked_size(r, "n", o.n, kind, 8);
        o.psf = r.parse_enum("psf", "gauss", psf_from_string);
        o.level = r.parse_enum("blur_level", "medium", blur_level_from_string);
        o.boundary = r.parse_enum("boundary", "reflective", boundary_from_string);
        o.commit_crime = r.boolean("commit_crime", false);
        o.phantom = r.parse_enum("phantom", "shepplike", phantom_from_string);
        o.seed = r.seed("seed");
        r.finish();
        p = gen_blur(o);
        break;
      }
      case ProblemKind::invinterp2: {
        InvInterpOptions o;
        o.n = checked_size(r, "n", o.n, kind, 2);
        o.method = r.parse_enum("method", "linear", interp_from_string);
        o.seed = r.seed("seed");
        r.finish();
        p = gen_invinterp2(o);
        break;
      }
      case ProblemKind::diffusion: {
        DiffusionOptions o;
        o.n = checked_size(r, "n", o.n, kind, 3);
        o.t_final = r.real("TFinal", o.t_final);
        o.t_steps = r.integer("Tsteps", o.t_steps);
        r.finish();
        p = gen_diffusion(o);
        break;
      }
      case ProblemKind::nmr: {
        NmrOptions o;
        const Index n = checked_size(r, "n", o.n1, kind, 2);
        o.n1 = checked_size(r, "n1", n, kind, 2);
        o.n2 = checked_size(r, "n2", n, kind, 2);
        o.m1 = r.integer("m1", 2 * o.n1);
        o.m2 = r.integer("m2", 2 * o.n2);
        if (o.m1 < 1 || o.m2 < 1) r.fail("m1 and m2 must be positive");
        o.t_log_limits = r.interval("Tloglimits", o.t_log_limits);
        o.tau_log_limits = r.interval("tauloglimits", o.tau_log_limits);
        o.material = r.str("material", o.material);
        r.finish();
        p = gen_nmr(o);
        break;
      }
      case ProblemKind::tomo: {
        TomoOptions o;
        o.n = checked_size(r, "n", o.n, kind, 8);
        const std::string* angles = r.find("angles");
        o.angles = r.reals("angles", angles ? *angles : "0:1:179");
        if (o.angles.empty()) r.fail("angles: at least one angle required");
        o.rays = r.integer("rays", 0);
        if (o.rays < 0) r.fail("rays must be positive");
        o.phantom = r.parse_enum("phantom", "shepplike", phantom_from_string);
        o.seed = r.seed("seed");
        r.finish();
        p = gen_tomo(o);
        break;
      }
      case ProblemKind::identity: {
        const Index n = checked_size(r, "n", 64, kind, 8);
        const PhantomKind ph = r.parse_enum("phantom", "shepplike", phantom_from_string);
        const std::uint64_t seed = r.seed("seed");
        r.finish();
        p = gen_identity(n, ph, seed);
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem", e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Solver blocks
// ---------------------------------------------------------------------------

namespace {

void read_solver_scalars(SolverBlock& sb) {
  Reader r("solver." + sb.name, sb.raw);
  r.find("solver");
  SolveOptions& o = sb.options;
  o.max_iter = r.integer("MaxIter", o.max_iter);
  if (const std::string* k = r.find("K")) {
    for (double v : r.reals("K", *k)) {
      if (v != std::floor(v) || v < 1.0) r.fail("K: iteration indices must be positive integers");
      sb.k.push_back(static_cast<Index>(v));
    }
    std::sort(sb.k.begin(), sb.k.end());
    sb.k.erase(std::unique(sb.k.begin(), sb.k.end()), sb.k.end());
  }
  o.noise_level = r.real("NoiseLevel", o.noise_level);
  o.eta = r.real("eta", o.eta);
  if (const std::string* v = r.find("RegParam")) {
    try {
      o.reg_param = reg_param_from_string(*v);
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }
  r.find("RegMatrix");
  o.no_stop = r.boolean("NoStop", o.no_stop);
  o.no_stop_out = r.boolean("NoStopOut", o.no_stop_out);
  o.ne_rtol = r.real("NE_Rtol", o.ne_rtol);
  o.stop_out = r.parse_enum("stopOut", to_string(o.stop_out), stop_out_from_string);
  o.stop_out_tol = r.real("stopOut_tol", o.stop_out_tol);
  o.stop_out_window = static_cast<int>(r.integer("stopOut_window", o.stop_out_window));
  o.x_min = r.opt_real("xMin");
  o.x_max = r.opt_real("xMax");
  o.x_energy = r.opt_real("xEnergy");
  o.omega = r.opt_real("omega");
  r.find("enrichment_basis");
  if (const std::string* v = r.find("inner_solver")) {
    try {
      o.inner_solver = solver_from_string(*v);
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }
  o.restart_mode = r.parse_enum("restart_mode", to_string(o.restart_mode), restart_mode_from_string);
  o.gcv_window = static_cast<int>(r.integer("gcv_window", o.gcv_window));
  o.gcv_tol = r.real("gcv_tol", o.gcv_tol);
  o.wgcv_weight = r.real("wgcv_weight", o.wgcv_weight);
  o.reorthogonalize = r.boolean("reorthogonalize", o.reorthogonalize);
  o.flexible_weights = r.boolean("flexible_weights", o.flexible_weights);
  o.sirt_variant = r.parse_enum("sirt_variant", to_string(o.sirt_variant), sirt_variant_from_string);
  r.find("x0");
  o.grid_rows = r.integer("grid_rows", 0);
  sb.use_x_true = r.boolean("x_true", true);
  r.finish();
  if (!sb.k.empty()) o.max_iter = sb.k.back();
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

}  // namespace

SolveOptions resolve_solver_options(const SolverBlock& block, const TestProblem& problem) {
  const std::string name = "solver." + block.name;
  Reader r(name, block.raw);
  SolveOptions o = block.options;
  const Index n = problem.a->cols();
  if (block.use_x_true) o.x_true = problem.x;

  const std::string l = r.str("RegMatrix", "identity");
  if (l == "laplacian1d") {
    o.reg_matrix = build_laplacian(LaplacianDim::one_d, n);
  } else if (l == "laplacian2d") {
    if (problem.info.x_rows != problem.info.x_cols || problem.info.x_rows * problem.info.x_cols != n) {
      r.fail("RegMatrix laplacian2d needs a square image unknown");
    }
    o.reg_matrix = build_laplacian(LaplacianDim::two_d, problem.info.x_rows);
  } else if (l != "identity") {
    r.fail("RegMatrix must be identity, laplacian1d or laplacian2d");
  }

  const std::string basis = r.str("enrichment_basis", block.id == SolverId::enrich ? "constant" : "none");
  if (basis == "constant") {
    o.enrichment_basis = Matrix::Ones(n, 1);
  } else if (basis == "linear") {
    Matrix w(n, 2);
    w.col(0).setOnes();
    for (Index i = 0; i < n; ++i) w(i, 1) = static_cast<double>(i) / static_cast<double>(std::max<Index>(n - 1, 1));
    o.enrichment_basis = std::move(w);
  } else if (basis != "none") {
    r.fail("enrichment_basis must be constant, linear or none");
  }

  if (const std::optional<double> x0 = r.opt_real("x0")) o.x0 = Vector::Constant(n, *x0);
  if (o.grid_rows == 0 && block.id == SolverId::htv && problem.info.x_rows * problem.info.x_cols == n &&
      problem.info.x_rows == problem.info.x_cols) {
    o.grid_rows = problem.info.x_rows;
  }
  return o;
}

// ---------------------------------------------------------------------------
// Config assembly
// ---------------------------------------------------------------------------

ExperimentConfig parse_config(std::istream& in) {
  const std::vector<IniSection> sections = parse_ini(in);
  ExperimentConfig cfg;
  bool have_problem = false;
  std::vector<std::string> seen;
  for (const IniSection& s : sections) {
    if (std::find(seen.begin(), seen.end(), s.name) != seen.end()) {
      throw ConfigError(s.name, "duplicate section");
    }
    seen.push_back(s.name);
    OptionMap raw;
    for (const auto& [k, v] : s.entries) {
      if (!raw.emplace(k, v).second) throw ConfigError(s.name, "duplicate option '" + k + "'");
    }

    if (s.name == "problem") {
      have_problem = true;
      auto it = raw.find("kind");
      if (it == raw.end()) throw ConfigError("problem", "missing 'kind'");
      try {
        cfg.problem = problem_from_string(it->second);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("problem", e.what());
      }
      cfg.problem_options = std::move(raw);
    } else if (s.name == "noise") {
      Reader r("noise", raw);
      NoiseSpec spec;
      spec.kind = r.parse_enum("kind", "gauss", noise_from_string);
      spec.level = r.real("level", spec.level);
      spec.seed = r.seed("seed");
      r.finish();
      if (!(spec.level >= 0.0 && spec.level < 1.0)) r.fail("level must lie in [0, 1)");
      cfg.noise = spec;
    } else if (s.name == "output") {
      Reader r("output", raw);
      cfg.output_dir = r.str("dir", cfg.output_dir);
      cfg.images = r.boolean("images", cfg.images);
      r.finish();
    } else if (s.name.rfind("solver.", 0) == 0) {
      SolverBlock sb;
      sb.name = s.name.substr(7);
      if (sb.name.empty()) throw ConfigError(s.name, "solver blocks need a name");
      for (char c : sb.name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
          throw ConfigError(s.name, "block names may only use letters, digits, '_' and '-'");
        }
      }
      const auto it = raw.find("solver");
      try {
        sb.id = solver_from_string(it != raw.end() ? it->second : sb.name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(s.name, e.what());
      }
      sb.raw = std::move(raw);
      read_solver_scalars(sb);
      cfg.solvers.push_back(std::move(sb));
    } else {
      throw ConfigError(s.name, "unknown section");
    }
  }
  if (!have_problem) throw ConfigError("problem", "missing [problem] section");
  if (cfg.solvers.empty()) throw ConfigError("solver", "no [solver.<name>] section");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

std::string convergence_csv(const IterationInfo& info) {
  const auto its = static_cast<std::size_t>(info.its);
  const bool enrm = info.enrm.size() >= its && its > 0 && !info.enrm.empty();
  const bool ne = !info.ne_rnrm.empty() && info.ne_rnrm.size() >= its;
  const bool lambda = !info.reg_p.empty() && info.reg_p.size() >= its;
  std::string out = "k,Rnrm";
  if (enrm) out += ",Enrm";
  if (ne) out += ",NE_Rnrm";
  if (lambda) out += ",lambda";
  out += '\n';
  for (std::size_t k = 0; k < its; ++k) {
    out += std::to_string(k + 1) + ',' + fmt(info.rnrm[k]);
    if (enrm) out += ',' + fmt(info.enrm[k]);
    if (ne) out += ',' + fmt(info.ne_rnrm[k]);
    if (lambda) out += ',' + fmt(info.reg_p[k]);
    out += '\n';
  }
  return out;
}

std::string summary_text(const std::string& block, SolverId id, const SolveResult& r) {
  const IterationInfo& info = r.info;
  std::string s;
  s += "block = " + block + "\n";
  s += "solver = " + std::string(to_string(id)) + "\n";
  s += "iterations = " + std::to_string(info.its) + "\n";
  s += "StopFlag = " + info.stop_flag + "\n";
  s += "StopReason = " + std::string(to_string(info.stop_reason)) + "\n";
  s += "StopReg.It = " + std::to_string(info.stop_reg.it) + "\n";
  if (info.stop_reg.it > 0 && static_cast<std::size_t>(info.stop_reg.it) <= info.rnrm.size()) {
    s += "StopReg.Rnrm = " + fmt(info.rnrm[static_cast<std::size_t>(info.stop_reg.it - 1)]) + "\n";
  }
  if (!info.enrm.empty()) {
    s += "BestReg.It = " + std::to_string(info.best_reg.it) + "\n";
    s += "BestReg.Enrm = " + fmt(info.enrm[static_cast<std::size_t>(info.best_reg.it - 1)]) + "\n";
  } else {
    s += "BestReg.It = none\n";
  }
  for (const std::string& w : info.warnings) s += "warning = " + w + "\n";
  return s;
}

std::vector<std::uint8_t> quantize_image(const Vector& values) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(values.size()), 128);
  if (values.size() == 0) return out;
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  if (!(hi > lo)) return out;
  for (Index i = 0; i < values.size(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround((values[i] - lo) / (hi - lo) * 255.0));
  }
  return out;
}

void write_pgm(const std::string& path, const Vector& values, Index rows, Index cols) {
  check_length(values, rows * cols, "write_pgm");
  const std::vector<std::uint8_t> q = quantize_image(values);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) out.put(static_cast<char>(q[static_cast<std::size_t>(r + c * rows)]));
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  auto token = [&]() {
    std::string t;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!t.empty()) break;
        continue;
      }
      t += static_cast<char>(c);
    }
    return t;
  };
  if (token() != "P5") throw std::runtime_error("'" + path + "' is not a binary PGM");
  PgmImage img;
  img.cols = std::stol(token());
  img.rows = std::stol(token());
  if (std::stol(token()) != 255) throw std::runtime_error("only maxval 255 is supported");
  img.pixels.resize(static_cast<std::size_t>(img.rows * img.cols));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error("truncated PGM '" + path + "'");
  }
  return img;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

bool is_image(Index rows, Index cols) { return rows > 1 && cols > 1; }

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  TestProblem problem;
  Vector bn;
  std::vector<SolveOptions> options;
  fs::path dir = cfg.output_dir;
  if (const char* env = std::getenv("REGU_OUTPUT_DIR"); env && *env) dir = env;
  try {
    problem = build_problem(cfg.problem, cfg.problem_options);
    bn = problem.b;
    if (cfg.noise) {
      try {
        bn = add_noise(problem.b, *cfg.noise).bn;
      } catch (const std::invalid_argument& e) {
        throw ConfigError("noise", e.what());
      }
    }
    for (const SolverBlock& sb : cfg.solvers) options.push_back(resolve_solver_options(sb, problem));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output", "cannot create directory '" + dir.string() + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  for (const std::string& w : problem.info.warnings) err << "warning [problem]: " << w << '\n';
  const ProblemInfo& info = problem.info;
  try {
    if (cfg.images && is_image(info.x_rows, info.x_cols)) {
      write_pgm((dir / "x_true.pgm").string(), problem.x, info.x_rows, info.x_cols);
    }
    if (cfg.images && is_image(info.b_rows, info.b_cols)) {
      write_pgm((dir / "b_noisy.pgm").string(), bn, info.b_rows, info.b_cols);
    }
  } catch (const std::exception& e) {
    err << "error [output]: " << e.what() << '\n';
    return 2;
  }

  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    const SolverBlock& sb = cfg.solvers[i];
    SolveResult r;
    try {
      r = solve(sb.id, *problem.a, bn, sb.k, options[i]);
    } catch (const std::invalid_argument& e) {
      err << "config error: [solver." << sb.name << "] " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "solver error: [solver." << sb.name << "] " << e.what() << '\n';
      return 2;
    }
    try {
      write_text(dir / (sb.name + ".csv"), convergence_csv(r.info));
      write_text(dir / (sb.name + "_summary.txt"), summary_text(sb.name, sb.id, r));
      if (cfg.images && is_image(info.x_rows, info.x_cols)) {
        write_pgm((dir / (sb.name + "_stop.pgm")).string(), r.info.stop_reg.x, info.x_rows, info.x_cols);
        if (!r.info.enrm.empty()) {
          write_pgm((dir / (sb.name + "_best.pgm")).string(), r.info.best_reg.x, info.x_rows, info.x_cols);
        }
      }
    } catch (const std::exception& e) {
      err << "error [solver." << sb.name << "]: " << e.what() << '\n';
      return 2;
    }
    out << sb.name << ": " << to_string(sb.id) << ", " << r.info.its << " iterations, StopReg.It = " << r.info.stop_reg.it;
    if (!r.info.enrm.empty()) out << ", BestReg.It = " << r.info.best_reg.it;
    out << ", " << r.info.stop_flag << '\n';
    for (const std::string& w : r.info.warnings) err << "warning [solver." << sb.name << "]: " << w << '\n';
  }
  out << "output written to " << dir.string() << '\n';
  return 0;
}

int run_config_file(const std::string& path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }
  return run_experiment(cfg, out, err);
}

}  // namespace regu
