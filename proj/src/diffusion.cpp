#include "regu/problems.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <memory>

namespace regu {

namespace {

using EigenSparse = Eigen::SparseMatrix<double>;

struct FemTriplets {
  std::vector<Triplet> mass;
  std::vector<Triplet> stiffness;
};

FemTriplets assemble(Index n) {
  if (n < 3) throw std::invalid_argument("diffusion needs n >= 3");
  const double h = 1.0 / static_cast<double>(n - 1);
  FemTriplets out;
  auto node = [n](Index r, Index c) { return r + c * n; };
  auto add_element = [&](const Index (&v)[3]) {
    double px[3], py[3];
    for (int i = 0; i < 3; ++i) {
      px[i] = static_cast<double>(v[i] / n) * h;  // column -> x
      py[i] = static_cast<double>(v[i] % n) * h;  // row -> y
    }
    const double det = (px[1] - px[0]) * (py[2] - py[0]) - (px[2] - px[0]) * (py[1] - py[0]);
    const double area = 0.5 * std::abs(det);
    double gx[3], gy[3];
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      gx[i] = (py[j] - py[k]) / det;
      gy[i] = (px[k] - px[j]) / det;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        out.mass.push_back({v[i], v[j], area / 12.0 * (i == j ? 2.0 : 1.0)});
        out.stiffness.push_back({v[i], v[j], area * (gx[i] * gx[j] + gy[i] * gy[j])});
      }
    }
  };
  for (Index c = 0; c + 1 < n; ++c) {
    for (Index r = 0; r + 1 < n; ++r) {
      const Index lower[3] = {node(r, c), node(r, c + 1), node(r + 1, c + 1)};
      const Index upper[3] = {node(r, c), node(r + 1, c + 1), node(r + 1, c)};
      add_element(lower);
      add_element(upper);
    }
  }
  return out;
}

EigenSparse to_eigen(Index n, const std::vector<Triplet>& t, double scale = 1.0) {
  std::vector<Eigen::Triplet<double>> et;
  et.reserve(t.size());
  for (const auto& e : t) et.emplace_back(e.row, e.col, scale * e.value);
  EigenSparse m(n, n);
  m.setFromTriplets(et.begin(), et.end());
  return m;
}

}  // namespace

std::pair<SparseMatrix, SparseMatrix> diffusion_fem_matrices(Index n) {
  FemTriplets f = assemble(n);
  return {SparseMatrix::from_triplets(n * n, n * n, std::move(f.mass)),
          SparseMatrix::from_triplets(n * n, n * n, std::move(f.stiffness))};
}

Vector diffusion_initial_condition(Index n) {
  // u0(x, y) = c(x; 0.4) c(y; 0.55) with c(z; z0) = (1 + cos(pi (z - z0) / 0.3)) / 2
  // on |z - z0| < 0.3 and 0 elsewhere, scaled to unit sum.
  const double h = 1.0 / static_cast<double>(n - 1);
  auto bump = [](double z, double z0) {
    const double d = (z - z0) / 0.3;
    return std::abs(d) < 1.0 ? 0.5 * (1.0 + std::cos(M_PI * d)) : 0.0;
  };
  Vector u(n * n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) u[r + c * n] = bump(c * h, 0.4) * bump(r * h, 0.55);
  }
  return u / u.sum();
}

TestProblem gen_diffusion(const DiffusionOptions& o) {
  const Index n = o.n;
  if (!(o.t_final > 0.0)) throw std::invalid_argument("diffusion TFinal must be > 0");
  if (o.t_steps < 1) throw std::invalid_argument("diffusion Tsteps must be >= 1");
  const Index size = n * n;
  const double dt = o.t_final / static_cast<double>(o.t_steps);
  const FemTriplets f = assemble(n);
  const EigenSparse mass = to_eigen(size, f.mass);
  const EigenSparse stiff = to_eigen(size, f.stiffness);

  auto lhs = std::make_shared<Eigen::SimplicialLDLT<EigenSparse>>();
  lhs->compute(EigenSparse(mass + 0.5 * dt * stiff));
  if (lhs->info() != Eigen::Success) throw std::runtime_error("diffusion: factorization failed");
  auto rhs = std::make_shared<EigenSparse>(mass - 0.5 * dt * stiff);
  const Index steps = o.t_steps;

  auto forward = [lhs, rhs, steps](const Vector& x) {
    Vector u = x;
    for (Index s = 0; s < steps; ++s) {
      u = lhs->solve(*rhs * u);
      if (lhs->info() != Eigen::Success) throw std::runtime_error("diffusion: linear solve failed");
    }
    return u;
  };

  TestProblem p;
  p.a = std::make_shared<FunctionalOperator>(size, size, forward);
  p.x = diffusion_initial_condition(n);
  p.b = p.a->apply(p.x);
  p.info.kind = ProblemKind::diffusion;
  p.info.x_rows = p.info.x_cols = p.info.b_rows = p.info.b_cols = n;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", o.t_final);
  p.info.params = {{"n", std::to_string(n)}, {"TFinal", buf}, {"Tsteps", std::to_string(o.t_steps)}};
  return p;
}

}  // namespace regu
