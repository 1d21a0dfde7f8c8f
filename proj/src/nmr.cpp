#include "regu/problems.hpp"

#include <cmath>

namespace regu {

namespace {

struct Peak {
  double mu1, mu2;  // log10 T1, log10 T2
  double s1, s2;
  double weight;
};

struct Material {
  const char* name;
  std::vector<Peak> peaks;
};

const std::vector<Material>& materials() {
  static const std::vector<Material> table = {
      {"carbonate", {{-1.0, -1.5, 0.25, 0.2, 1.0}, {-2.0, -2.3, 0.2, 0.15, 0.6}}},
      {"methane", {{0.0, -0.5, 0.2, 0.3, 1.0}, {-0.5, -1.0, 0.15, 0.15, 0.4}}},
      {"organic", {{-2.5, -3.0, 0.3, 0.2, 1.0}, {-1.5, -2.0, 0.2, 0.25, 0.5}, {-3.0, -3.5, 0.15, 0.15, 0.3}}},
      {"hydroxyl", {{-3.0, -3.2, 0.2, 0.2, 1.0}, {-2.2, -2.6, 0.25, 0.2, 0.5}}},
  };
  return table;
}

void check_limits(const std::pair<double, double>& lim, const char* what) {
  if (!(lim.first < lim.second)) {
    throw std::invalid_argument(std::string(what) + ": left limit must be below right limit");
  }
}

}  // namespace

Vector logspace(double lo, double hi, Index count) {
  Vector v(count);
  for (Index i = 0; i < count; ++i) {
    const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    v[i] = std::pow(10.0, lo + t * (hi - lo));
  }
  return v;
}

std::vector<std::string> nmr_materials() {
  std::vector<std::string> names;
  for (const auto& m : materials()) names.emplace_back(m.name);
  return names;
}

Matrix nmr_phantom(const std::string& material, const Vector& t1, const Vector& t2) {
  const Material* found = nullptr;
  for (const auto& m : materials()) {
    if (material == m.name) found = &m;
  }
  if (!found) throw std::invalid_argument("unknown NMR material '" + material + "'");
  Matrix x = Matrix::Zero(t1.size(), t2.size());
  for (Index j = 0; j < t2.size(); ++j) {
    const double l2 = std::log10(t2[j]);
    for (Index i = 0; i < t1.size(); ++i) {
      const double l1 = std::log10(t1[i]);
      for (const Peak& p : found->peaks) {
        const double z1 = (l1 - p.mu1) / p.s1, z2 = (l2 - p.mu2) / p.s2;
        x(i, j) += p.weight * std::exp(-0.5 * (z1 * z1 + z2 * z2));
      }
    }
  }
  const double total = x.sum();
  if (total > 0.0) x /= total;
  return x;
}

TestProblem gen_nmr(const NmrOptions& o) {
  if (o.n1 < 2 || o.n2 < 2) throw std::invalid_argument("nmr needs n1, n2 >= 2");
  check_limits(o.t_log_limits, "Tloglimits");
  check_limits(o.tau_log_limits, "tauloglimits");
  const Index m1 = o.m1 > 0 ? o.m1 : 2 * o.n1;
  const Index m2 = o.m2 > 0 ? o.m2 : 2 * o.n2;
  const Vector t1 = logspace(o.t_log_limits.first, o.t_log_limits.second, o.n1);
  const Vector t2 = logspace(o.t_log_limits.first, o.t_log_limits.second, o.n2);
  const Vector tau1 = logspace(o.tau_log_limits.first, o.tau_log_limits.second, m1);
  const Vector tau2 = logspace(o.tau_log_limits.first, o.tau_log_limits.second, m2);

  Matrix a1(m1, o.n1), a2(m2, o.n2);
  for (Index k = 0; k < o.n1; ++k) {
    for (Index l = 0; l < m1; ++l) a1(l, k) = 1.0 - 2.0 * std::exp(-tau1[l] / t1[k]);
  }
  for (Index k = 0; k < o.n2; ++k) {
    for (Index l = 0; l < m2; ++l) a2(l, k) = std::exp(-tau2[l] / t2[k]);
  }

  TestProblem p;
  p.x = flatten(nmr_phantom(o.material, t1, t2));
  p.a = std::make_shared<KroneckerOperator>(std::move(a2), std::move(a1));
  p.b = p.a->apply(p.x);
  p.info.kind = ProblemKind::nmr;
  p.info.x_rows = o.n1;
  p.info.x_cols = o.n2;
  p.info.b_rows = m1;
  p.info.b_cols = m2;
  auto fmt = [](const std::pair<double, double>& l) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%g, %g]", l.first, l.second);
    return std::string(buf);
  };
  p.info.params = {{"n1", std::to_string(o.n1)},         {"n2", std::to_string(o.n2)},
                   {"m1", std::to_string(m1)},           {"m2", std::to_string(m2)},
                   {"Tloglimits", fmt(o.t_log_limits)}, {"tauloglimits", fmt(o.tau_log_limits)},
                   {"material", o.material}};
  return p;
}

}  // namespace regu
