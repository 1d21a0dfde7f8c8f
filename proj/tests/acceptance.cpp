// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "regu/experiment.hpp"
#include "regu/problems.hpp"
#include "regu/regmat.hpp"
#include "regu/solvers.hpp"
#include "regu/stopping.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace regu;
using namespace regu::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

IterSet upto(Index k) {
  IterSet s;
  for (Index i = 1; i <= k; ++i) s.push_back(i);
  return s;
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

Index extend(Index i, Index n, Boundary bc) {
  if (i >= 0 && i < n) return i;
  if (bc == Boundary::zero) return -1;
  if (bc == Boundary::periodic) return ((i % n) + n) % n;
  // Mirror about the pixel edge: -1 -> 0, n -> n - 1.
  while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
  return i;
}

Matrix dense_blur(const Matrix& psf, Index n, Boundary bc) {
  const Index cr = n / 2, cc = n / 2;
  Matrix a = Matrix::Zero(n * n, n * n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      for (Index pc = 0; pc < n; ++pc) {
        for (Index pr = 0; pr < n; ++pr) {
          if (psf(pr, pc) == 0.0) continue;
          const Index sr = extend(r - (pr - cr), n, bc), sc = extend(c - (pc - cc), n, bc);
          if (sr < 0 || sc < 0) continue;
          a(r + c * n, sr + sc * n) += psf(pr, pc);
        }
      }
    }
  }
  return a;
}

/// Length of the line p + t d inside the box [x0,x1] x [y0,y1].
double clip_length(double px, double py, double dx, double dy, double x0, double x1, double y0, double y1) {
  double lo = -1e300, hi = 1e300;
  const auto axis = [&](double p, double d, double a, double b) {
    if (std::abs(d) < 1e-15) {
      if (p < a || p > b) hi = lo - 1.0;
      return;
    }
    const double t0 = (a - p) / d, t1 = (b - p) / d;
    lo = std::max(lo, std::min(t0, t1));
    hi = std::min(hi, std::max(t0, t1));
  };
  axis(px, dx, x0, x1);
  axis(py, dy, y0, y1);
  return hi > lo ? hi - lo : 0.0;
}

Matrix dense_tomo(Index n, const std::vector<double>& angles, Index rays) {
  const double h = 1.0 / static_cast<double>(n);
  Matrix a = Matrix::Zero(static_cast<Index>(angles.size()) * rays, n * n);
  for (std::size_t q = 0; q < angles.size(); ++q) {
    const double th = angles[q] * M_PI / 180.0, dx = std::cos(th), dy = std::sin(th);
    for (Index i = 0; i < rays; ++i) {
      const double s = (static_cast<double>(i) - (rays - 1) / 2.0) * h;
      const double px = 0.5 - s * dy, py = 0.5 + s * dx;
      for (Index c = 0; c < n; ++c) {
        for (Index r = 0; r < n; ++r) {
          // Row 0 is the top of the unit square.
          a(i + static_cast<Index>(q) * rays, r + c * n) =
              clip_length(px, py, dx, dy, c * h, (c + 1) * h, 1.0 - (r + 1) * h, 1.0 - r * h);
        }
      }
    }
  }
  return a;
}

/// P1 mass and stiffness on the triangulation with diagonals from (r, c) to (r+1, c+1).
std::pair<Matrix, Matrix> dense_fem(Index n) {
  const double h = 1.0 / static_cast<double>(n - 1), area = 0.5 * h * h;
  Matrix m = Matrix::Zero(n * n, n * n), s = Matrix::Zero(n * n, n * n);
  const auto add = [&](Index right, Index o1, Index o2) {
    const Index v[3] = {right, o1, o2};
    // Right isosceles triangle, right angle at v[0].
    const double k[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m(v[i], v[j]) += area / 12.0 * (i == j ? 2.0 : 1.0);
        s(v[i], v[j]) += k[i][j];
      }
    }
  };
  for (Index c = 0; c + 1 < n; ++c) {
    for (Index r = 0; r + 1 < n; ++r) {
      const Index a = r + c * n, b = r + (c + 1) * n, d = r + 1 + (c + 1) * n, e = r + 1 + c * n;
      add(b, a, d);
      add(e, a, d);
    }
  }
  return {m, s};
}

double bilinear(const Vector& x, Index n, double s, double t) {
  const double cs = s * (n - 1), rt = t * (n - 1);
  const Index c0 = std::min<Index>(static_cast<Index>(cs), n - 2), r0 = std::min<Index>(static_cast<Index>(rt), n - 2);
  const double fc = cs - c0, fr = rt - r0;
  const auto at = [&](Index r, Index c) { return x[r + c * n]; };
  return (1 - fr) * (1 - fc) * at(r0, c0) + fr * (1 - fc) * at(r0 + 1, c0) + (1 - fr) * fc * at(r0, c0 + 1) +
         fr * fc * at(r0 + 1, c0 + 1);
}

double off_support(const Vector& x, const Vector& truth) {
  double m = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (truth[i] == 0.0) m = std::max(m, std::abs(x[i]));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome adjoint_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = 32;
  std::vector<std::pair<std::string, OperatorPtr>> ops;
  for (Boundary bc : {Boundary::zero, Boundary::periodic, Boundary::reflective}) {
    BlurOptions o;
    o.n = n;
    o.boundary = bc;
    ops.emplace_back(std::string("blur/") + to_string(bc), gen_blur(o).a);
  }
  ops.emplace_back("invinterp2", gen_invinterp2({.n = n, .method = InterpMethod::linear, .seed = 0}).a);
  NmrOptions nmr;
  nmr.n1 = nmr.n2 = n;
  ops.emplace_back("nmr", gen_nmr(nmr).a);
  TomoOptions tomo;
  tomo.n = n;
  ops.emplace_back("tomo", gen_tomo(tomo).a);
  BlurOptions bo;
  bo.n = n;
  const OperatorPtr blur = gen_blur(bo).a;
  const RegularizationMatrix lap = build_laplacian(LaplacianDim::two_d, n);
  ops.emplace_back("stacked", stack_vertical(blur, make_sparse(lap.matrix), 0.3));
  ops.emplace_back("priorconditioned",
                   std::make_shared<PriorconditionedOperator>(blur, Priorconditioner::create(lap)));
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, op] : ops) {
    const double e = adjoint_consistency_test(*op, 20, 1);
    if (e > worst) worst = e, worst_name = name;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-10 && t < 10.0,
          fmt("%g operators, worst %.2e", static_cast<double>(ops.size()), worst) + " (" + worst_name + ")" +
              fmt(", %.2f s", t)};
}

Outcome dense_oracles() {
  std::vector<std::pair<std::string, double>> errs;
  const Index n = 8;
  for (Boundary bc : {Boundary::zero, Boundary::periodic, Boundary::reflective}) {
    for (PsfKind k : {PsfKind::gauss, PsfKind::defocus, PsfKind::motion, PsfKind::shake}) {
      BlurOptions o;
      o.n = n;
      o.psf = k;
      o.level = BlurLevel::mild;
      o.boundary = bc;
      o.seed = 3;
      const TestProblem p = gen_blur(o);
      errs.emplace_back(std::string("blur/") + to_string(k) + "/" + to_string(bc),
                        (densify(*p.a) - dense_blur(*p.info.psf, n, bc)).cwiseAbs().maxCoeff());
    }
  }
  {
    // Same scatter stream as the generator: uniform (s, t) pairs from the seed.
    const TestProblem p = gen_invinterp2({.n = n, .method = InterpMethod::linear, .seed = 5});
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix dense(n * n, n * n);
    for (Index i = 0; i < n * n; ++i) {
      const double s = u(gen), t = u(gen);
      for (Index j = 0; j < n * n; ++j) dense(i, j) = bilinear(Vector::Unit(n * n, j), n, s, t);
    }
    errs.emplace_back("invinterp2", (densify(*p.a) - dense).cwiseAbs().maxCoeff());
  }
  {
    const DiffusionOptions o{.n = n, .t_final = 0.01, .t_steps = 100};
    const TestProblem p = gen_diffusion(o);
    const auto [m, s] = dense_fem(n);
    const double dt = o.t_final / static_cast<double>(o.t_steps);
    const Matrix step = (m + 0.5 * dt * s).lu().solve(m - 0.5 * dt * s);
    Matrix dense = Matrix::Identity(n * n, n * n);
    for (Index k = 0; k < o.t_steps; ++k) dense = step * dense;
    errs.emplace_back("diffusion", (densify(*p.a) - dense).cwiseAbs().maxCoeff());
  }
  {
    NmrOptions o;
    o.n1 = 4;
    o.n2 = 6;
    const TestProblem p = gen_nmr(o);
    const Vector t1 = logspace(-4, 1, 4), t2 = logspace(-4, 1, 6), u1 = logspace(-4, 1, 8), u2 = logspace(-4, 1, 12);
    Matrix dense(8 * 12, 4 * 6);
    for (Index l2 = 0; l2 < 12; ++l2) {
      for (Index l1 = 0; l1 < 8; ++l1) {
        for (Index k2 = 0; k2 < 6; ++k2) {
          for (Index k1 = 0; k1 < 4; ++k1) {
            dense(l1 + 8 * l2, k1 + 4 * k2) = (1.0 - 2.0 * std::exp(-u1[l1] / t1[k1])) * std::exp(-u2[l2] / t2[k2]);
          }
        }
      }
    }
    errs.emplace_back("nmr", (densify(*p.a) - dense).cwiseAbs().maxCoeff());
  }
  {
    const std::vector<double> angles{10, 35, 60, 100, 145, 170};
    const TestProblem p = gen_tomo({.n = n, .angles = angles, .rays = 11});
    errs.emplace_back("tomo", (densify(*p.a) - dense_tomo(n, angles, 11)).cwiseAbs().maxCoeff());
  }
  {
    const TestProblem p = gen_identity(n);
    errs.emplace_back("identity", (densify(*p.a) - Matrix::Identity(n * n, n * n)).cwiseAbs().maxCoeff());
  }
  double worst = 0.0;
  std::string name;
  for (const auto& [k, e] : errs) {
    if (e > worst || name.empty()) worst = e, name = k;
  }
  return {worst <= 1e-10, fmt("%g generators, worst %.2e", static_cast<double>(errs.size()), worst) + " (" + name + ")"};
}

Outcome tikhonov_limits() {
  const Matrix a = random_matrix(12, 8, 301);
  const Vector b = random_vector(12, 302);
  const double lambda = 0.5;
  const Vector ref = tikhonov(a, b, lambda);
  const auto op = make_dense(a);
  SolveOptions o;
  o.reg_param = RegParam::fixed(lambda);
  o.max_iter = 200;
  const SolveResult c = cgls(*op, b, {}, o);
  const SolveResult h = hybrid_lsqr(*op, b, {8}, o);
  SolveOptions f = o;
  f.max_iter = 3000;
  f.ne_rtol = 1e-14;
  const SolveResult fi = fista(*op, b, {}, f);
  const double ec = rel_diff(c.x.col(c.x.cols() - 1), ref);
  const double eh = rel_diff(h.x.col(h.x.cols() - 1), ref);
  const double ef = rel_diff(fi.x.col(fi.x.cols() - 1), ref);
  return {std::max({ec, eh, ef}) <= 1e-6, fmt("cgls %.1e, hybrid_lsqr %.1e, fista %.1e", ec, eh, ef)};
}

Outcome hybrid_equivalence() {
  double worst_cgls = 0.0, worst_oracle = 0.0, worst_gmres = 0.0;
  std::string where;
  for (Index m : {60, 200}) {
    for (double kappa : {1e2, 1e4, 1e6}) {
      const Matrix a = conditioned_matrix(m, m / 2, kappa, 11);
      const Vector b = add_noise(a * random_vector(m / 2, 77), {NoiseKind::gauss, 0.01, 1}).bn;
      SolveOptions h;
      h.reg_param = RegParam::fixed(0.0);
      h.max_iter = 15;
      h.no_stop = true;
      SolveOptions c;
      c.max_iter = 15;
      c.no_stop = true;
      const SolveResult hr = hybrid_lsqr(*make_dense(a), b, upto(15), h);
      const SolveResult cr = cgls(*make_dense(a), b, upto(15), c);
      const Matrix ata = a.transpose() * a;
      for (Index k = 1; k <= std::min<Index>(hr.x.cols(), cr.x.cols()); ++k) {
        const double d = rel_diff(hr.x.col(k - 1), cr.x.col(k - 1));
        if (d > worst_cgls) {
          worst_cgls = d;
          where = fmt("%gx%g kappa %.0e k=%g", static_cast<double>(m), static_cast<double>(m / 2), kappa,
                      static_cast<double>(k));
        }
        const Vector exact = ls_over_span(a, b, krylov_basis(ata, a.transpose() * b, k));
        worst_oracle = std::max(worst_oracle, rel_diff(hr.x.col(k - 1), exact));
      }

      const Matrix sq = conditioned_matrix(m / 2, m / 2, kappa, 13);
      const Vector bs = add_noise(sq * random_vector(m / 2, 78), {NoiseKind::gauss, 0.01, 2}).bn;
      const SolveResult gr = hybrid_gmres(*make_dense(sq), bs, upto(15), h);
      for (Index k = 1; k <= gr.x.cols(); ++k) {
        const Vector exact = ls_over_span(sq, bs, krylov_basis(sq, bs, k));
        worst_gmres = std::max(worst_gmres, rel_diff(gr.x.col(k - 1), exact));
      }
    }
  }
  return {worst_cgls <= 1e-8 && worst_gmres <= 1e-8,
          fmt("hybrid_lsqr vs cgls worst %.1e", worst_cgls) + " at " + where +
              fmt("; hybrid_lsqr vs exact Krylov %.1e; hybrid_gmres vs GMRES %.1e", worst_oracle, worst_gmres)};
}

Outcome gcv_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int agree = 0, identical = 0;
  const int problems = 50;
  for (int s = 0; s < problems; ++s) {
    const Index k = 2 + s % 12;
    ProjectedProblem p;
    p.r = Matrix::Zero(k + 1, k);
    for (Index j = 0; j < k; ++j) {
      p.r(j, j) = std::pow(10.0, -4.0 * j / static_cast<double>(k)) * (0.5 + u(gen));
      p.r(j + 1, j) = std::pow(10.0, -4.0 * j / static_cast<double>(k)) * (0.2 + 0.5 * u(gen));
    }
    p.rhs = Vector::Zero(k + 1);
    p.rhs[0] = 1.0 + u(gen);
    p.full_rows = 50 + 10 * s;
    const ProjectedSvd svd(p);
    const LambdaChoice c = choose_lambda(svd, {LambdaRule::gcv});
    const double lo = std::log10(1e-12 * svd.sigma_max()), hi = std::log10(svd.sigma_max());
    const int pts = 5000;
    const double cell = (hi - lo) / (pts - 1);
    double best = std::numeric_limits<double>::infinity(), arg = lo;
    for (int i = 0; i < pts; ++i) {
      const double g = gcv_function(svd, std::pow(10.0, lo + cell * i), {});
      if (g < best) best = g, arg = lo + cell * i;
    }
    agree += std::abs(std::log10(std::max(c.lambda, 1e-300)) - arg) <= cell * (1.0 + 1e-9);
    LambdaSpec w{LambdaRule::wgcv};
    w.wgcv_weight = 1.0;
    const LambdaChoice cw = choose_lambda(svd, w);
    const double lam = std::pow(10.0, arg);
    identical += cw.lambda == c.lambda && gcv_function(svd, lam, {GcvVariant::weighted, 1.0}) ==
                                              gcv_function(svd, lam, {GcvVariant::standard, 1.0});
  }
  return {agree == problems && identical == problems,
          fmt("%g/%g within one grid cell, %g/%g weighted(w=1) identical", agree, problems, identical, problems)};
}

Outcome discrepancy_semantics() {
  BlurOptions bo;
  bo.n = 32;
  const TestProblem p = gen_blur(bo);
  const Vector bn = add_noise(p.b, {NoiseKind::gauss, 0.01, 1}).bn;
  SolveOptions o;
  o.noise_level = 0.01;
  o.eta = 1.01;
  o.x_true = p.x;
  const SolveResult stop = cgls(*p.a, bn, {}, o);
  o.no_stop = true;
  const SolveResult full = cgls(*p.a, bn, {}, o);
  Index first = 0;
  for (std::size_t k = 0; k < full.info.rnrm.size(); ++k) {
    if (full.info.rnrm[k] <= 0.0101) {
      first = static_cast<Index>(k) + 1;
      break;
    }
  }
  const auto& e = full.info.enrm;
  const auto best = std::min_element(e.begin(), e.end()) - e.begin();
  const bool interior = best > 0 && best + 1 < static_cast<long>(e.size()) && e.back() > e[static_cast<std::size_t>(best)];
  const bool stops = first > 0 && stop.info.stop_reg.it == first && stop.info.its == first &&
                     full.info.stop_reg.it == first && stop.info.stop_reason == StopReason::discrepancy;
  return {stops && interior, fmt("first Rnrm <= 0.0101 at k=%g, stopped at k=%g; Enrm min at k=%g of %g",
                                 static_cast<double>(first), static_cast<double>(stop.info.stop_reg.it),
                                 static_cast<double>(best + 1), static_cast<double>(e.size()))};
}

Outcome noise_scaling() {
  const Vector b = random_vector(1000, 401).cwiseAbs() + Vector::Constant(1000, 0.1);
  double worst = 0.0;
  bool repro = true;
  for (NoiseKind k : {NoiseKind::gauss, NoiseKind::laplace}) {
    for (double level : {1e-3, 1e-2, 1e-1}) {
      const NoisyData d = add_noise(b, {k, level, 9});
      worst = std::max(worst, std::abs((d.bn - b).norm() / b.norm() - level));
    }
  }
  for (NoiseKind k : {NoiseKind::gauss, NoiseKind::laplace, NoiseKind::multiplicative, NoiseKind::logpoisson}) {
    const NoisyData x = add_noise(b, {k, 0.05, 17}), y = add_noise(b, {k, 0.05, 17});
    repro = repro && std::memcmp(x.bn.data(), y.bn.data(), sizeof(double) * static_cast<std::size_t>(x.bn.size())) == 0;
  }
  return {worst <= 1e-12 && repro, fmt("worst level deviation %.1e, seeded draws byte-identical: ", worst) +
                                       (repro ? "yes" : "no")};
}

Outcome constraint_enforcement() {
  TomoOptions to;
  to.n = 16;
  for (int a = 0; a < 180; a += 6) to.angles.push_back(a);
  const TestProblem p = gen_tomo(to);
  const Vector bn = add_noise(p.b, {NoiseKind::gauss, 0.05, 3}).bn;
  SolveOptions box;
  box.x_min = 0.0;
  box.x_max = 1.0;
  box.max_iter = 30;
  box.no_stop = true;
  bool ok = true;
  std::string detail;
  const auto within = [](const Matrix& x, double lo, double hi) { return x.minCoeff() >= lo && x.maxCoeff() <= hi; };
  SolveOptions plain;
  plain.max_iter = 30;
  plain.no_stop = true;
  const SolveResult m = mrnsd(*p.a, bn, upto(30), plain);
  ok = ok && m.x.minCoeff() >= 0.0;
  detail += fmt("mrnsd min %.2e", m.x.minCoeff());
  for (SolverId id : {SolverId::fista, SolverId::sirt, SolverId::art}) {
    const SolveResult r = solve(id, *p.a, bn, upto(30), box);
    ok = ok && within(r.x, 0.0, 1.0);
    detail += std::string(", ") + to_string(id) + fmt(" [%.3g, %.3g]", r.x.minCoeff(), r.x.maxCoeff());
  }
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Vector x = random_vector(200, 500 + s) * 2.0;
    const double e = 1.0 + static_cast<double>(s);
    worst = std::max(worst, std::abs(project_energy(x, e).sum() - e) / e);
    worst = std::max(worst, std::abs(project_constraints(x, 0.0, 0.9, e).sum() - e) / e);
  }
  SolveOptions en = plain;
  en.x_energy = p.x.sum();
  const SolveResult fe = fista(*p.a, bn, upto(30), en);
  for (Index j = 0; j < fe.x.cols(); ++j) worst = std::max(worst, std::abs(fe.x.col(j).sum() - *en.x_energy) / *en.x_energy);
  ok = ok && worst <= 1e-10;
  return {ok, detail + fmt(", energy sum error %.1e", worst)};
}

Outcome tomography_geometry() {
  double worst_ratio = 0.0;
  for (Index n : {8, 16, 32}) {
    std::vector<double> angles;
    for (int a = 0; a < 180; ++a) angles.push_back(a);
    const SparseMatrix s = tomo_matrix(n, angles, static_cast<Index>(std::llround(std::sqrt(2.0) * n)));
    for (Index i = 0; i < s.rows; ++i) {
      const double nnz = static_cast<double>(s.row_offsets[i + 1] - s.row_offsets[i]);
      worst_ratio = std::max(worst_ratio, nnz / (2.0 * n));
    }
  }
  double chord_err = 0.0;
  for (Index n : {8, 16, 32}) {
    const Index rays = 2 * n + 1;
    const SparseMatrix s = tomo_matrix(n, {45.0, 135.0}, rays);
    for (Index i = 0; i < 2 * rays; ++i) {
      double sum = 0.0;
      for (Index q = s.row_offsets[i]; q < s.row_offsets[i + 1]; ++q) sum += s.values[q];
      const double d = std::abs((i % rays - (rays - 1) / 2.0) / n);
      const double chord = std::max(0.0, std::sqrt(2.0) * (1.0 - std::sqrt(2.0) * d));
      chord_err = std::max(chord_err, std::abs(sum - chord));
    }
  }
  return {worst_ratio <= 1.0 && chord_err <= 1e-10,
          fmt("max row nnz / 2n = %.3f, 45 degree chord error %.1e", worst_ratio, chord_err)};
}

Outcome severity_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = severity_scan({ProblemKind::blur, ProblemKind::diffusion, ProblemKind::tomo, ProblemKind::invinterp2}, 16);
  const double severe = std::max(s[0].decay_ratio, s[1].decay_ratio);
  const double mild = std::min(s[2].decay_ratio, s[3].decay_ratio);
  const double t = seconds_since(t0);
  return {severe < mild && t < 30.0, fmt("decay ratio blur %.1e, diffusion %.1e, tomo %.1e, invinterp2 %.1e", s[0].decay_ratio,
                                         s[1].decay_ratio, s[2].decay_ratio, s[3].decay_ratio) +
                                         fmt(", %.1f s", t)};
}

Outcome sparse_reconstruction() {
  BlurOptions bo;
  bo.n = 32;
  bo.phantom = PhantomKind::dotk;
  bo.seed = 5;
  const TestProblem p = gen_blur(bo);
  const Vector bn = add_noise(p.b, {NoiseKind::gauss, 0.1, 5}).bn;
  const double scale = p.x.cwiseAbs().maxCoeff();

  SolveOptions base;
  base.x_true = p.x;
  base.max_iter = 80;
  base.no_stop = true;
  const SolveResult c = cgls(*p.a, bn, {}, base);
  const SolveResult e = hybrid_fgmres(*p.a, bn, {}, base);
  SolveOptions io = base;
  io.reg_param = RegParam::rule(RegParamKind::discrep);
  io.noise_level = 0.1;
  io.eta = 1.1;
  io.no_stop_out = true;
  const SolveResult r = irn(*p.a, bn, {80}, io);

  const double oc = off_support(c.info.best_reg.x, p.x) / scale;
  const double oe = off_support(e.info.best_reg.x, p.x) / scale;
  const double oi = off_support(r.info.best_reg.x, p.x) / scale;
  return {oi <= 0.1 && oe <= 0.1 && oc > 0.1,
          fmt("off-support max / max|x|: irn %.3f, hybrid_fgmres %.3f, cgls %.3f (bound 0.1)", oi, oe, oc)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = fs::temp_directory_path() / ("regu_acceptance_" + std::to_string(::getpid()));
  int configs = 0, identical = 0, files = 0;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(REGU_CONFIG_DIR)) {
    if (e.path().extension() == ".ini") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const fs::path& cfg : paths) {
    ++configs;
    bool same = true;
    fs::path dirs[2];
    for (int run = 0; run < 2; ++run) {
      dirs[run] = root / (cfg.stem().string() + "_" + std::to_string(run));
      fs::remove_all(dirs[run]);
      ExperimentConfig c = load_config(cfg.string());
      c.output_dir = dirs[run].string();
      std::ostringstream out, err;
      same = same && run_experiment(c, out, err) == 0;
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      ++files;
      same = same && fs::exists(dirs[1] / e.path().filename()) && slurp(e.path()) == slurp(dirs[1] / e.path().filename());
    }
    identical += same;
  }
  fs::remove_all(root);
  const double t = seconds_since(t0);
  return {configs > 0 && identical == configs,
          fmt("%g/%g bundled configs byte-identical on rerun (%g files), %.1f s for both runs", identical, configs, files, t)};
}

}  // namespace

int main() {
  ::unsetenv("REGU_OUTPUT_DIR");
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"adjoint consistency", adjoint_consistency},
      {"dense-oracle equivalence", dense_oracles},
      {"Tikhonov correctness", tikhonov_limits},
      {"hybrid/plain equivalence", hybrid_equivalence},
      {"GCV oracle", gcv_oracle},
      {"discrepancy semantics", discrepancy_semantics},
      {"noise scaling", noise_scaling},
      {"constraint enforcement", constraint_enforcement},
      {"tomography geometry", tomography_geometry},
      {"severity ordering", severity_ordering},
      {"sparse reconstruction", sparse_reconstruction},
      {"end-to-end determinism", determinism},
  };
  const auto t0 = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s: %s -- %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed, %.1f s\n", failed, criteria.size(), seconds_since(t0));
  return failed == 0 ? 0 : 1;
}
