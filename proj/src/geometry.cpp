#include "regu/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace regu {

// ---------------------------------------------------------------------------
// Inverse interpolation
// ---------------------------------------------------------------------------

const char* to_string(InterpMethod m) { return m == InterpMethod::nearest ? "nearest" : "linear"; }

InterpMethod interp_from_string(const std::string& name) {
  if (name == "nearest") return InterpMethod::nearest;
  if (name == "linear") return InterpMethod::linear;
  throw std::invalid_argument("unknown interpolation method '" + name + "'");
}

double interp_test_function(double s, double t) { return std::sin(M_PI * s) * std::sin(M_PI / 2.0 * t); }

SparseMatrix interpolation_matrix(Index n, const std::vector<std::pair<double, double>>& points,
                                  InterpMethod method) {
  if (n < 2) throw std::invalid_argument("interpolation grid needs n >= 2");
  const double scale = static_cast<double>(n - 1);
  std::vector<Triplet> trip;
  trip.reserve(points.size() * 4);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = static_cast<Index>(i);
    const double cs = std::clamp(points[i].first, 0.0, 1.0) * scale;
    const double rt = std::clamp(points[i].second, 0.0, 1.0) * scale;
    if (method == InterpMethod::nearest) {
      const auto c = static_cast<Index>(std::llround(cs));
      const auto r = static_cast<Index>(std::llround(rt));
      trip.push_back({row, r + c * n, 1.0});
      continue;
    }
    const Index c0 = std::min(static_cast<Index>(std::floor(cs)), n - 2);
    const Index r0 = std::min(static_cast<Index>(std::floor(rt)), n - 2);
    const double fc = cs - static_cast<double>(c0);
    const double fr = rt - static_cast<double>(r0);
    const double w[4] = {(1 - fr) * (1 - fc), fr * (1 - fc), (1 - fr) * fc, fr * fc};
    const Index idx[4] = {r0 + c0 * n, r0 + 1 + c0 * n, r0 + (c0 + 1) * n, r0 + 1 + (c0 + 1) * n};
    for (int q = 0; q < 4; ++q) {
      if (w[q] != 0.0) trip.push_back({row, idx[q], w[q]});
    }
  }
  return SparseMatrix::from_triplets(static_cast<Index>(points.size()), n * n, trip);
}

TestProblem gen_invinterp2(const InvInterpOptions& o) {
  const Index n = o.n;
  if (n < 2) throw std::invalid_argument("invinterp2 needs n >= 2");
  const Index count = n * n;
  std::mt19937_64 gen(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> points(static_cast<std::size_t>(count));
  for (auto& pt : points) {
    pt.first = u(gen);
    pt.second = u(gen);
  }

  TestProblem p;
  p.a = make_sparse(interpolation_matrix(n, points, o.method));
  p.x.resize(count);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      p.x[r + c * n] = interp_test_function(static_cast<double>(c) / (n - 1), static_cast<double>(r) / (n - 1));
    }
  }
  p.b.resize(count);
  for (Index i = 0; i < count; ++i) p.b[i] = interp_test_function(points[i].first, points[i].second);
  p.info.kind = ProblemKind::invinterp2;
  p.info.x_rows = p.info.x_cols = n;
  p.info.b_rows = count;
  p.info.b_cols = 1;
  p.info.params = {{"n", std::to_string(n)}, {"method", to_string(o.method)}, {"seed", std::to_string(o.seed)}};
  return p;
}

// ---------------------------------------------------------------------------
// Parallel-beam tomography
// ---------------------------------------------------------------------------

SparseMatrix tomo_matrix(Index n, const std::vector<double>& angles_deg, Index rays, Index* zero_rows) {
  if (n < 2) throw std::invalid_argument("tomography needs n >= 2");
  if (rays < 1) throw std::invalid_argument("tomography needs at least one ray per angle");
  const double h = 1.0 / static_cast<double>(n);
  const auto na = static_cast<Index>(angles_deg.size());
  std::vector<Triplet> trip;
  std::vector<double> ts;
  Index empty = 0;

  for (Index a = 0; a < na; ++a) {
    const double th = angles_deg[a] * M_PI / 180.0;
    const double dx = std::cos(th), dy = std::sin(th);
    for (Index i = 0; i < rays; ++i) {
      const Index row = i + a * rays;
      const double s = (static_cast<double>(i) - (rays - 1) / 2.0) / static_cast<double>(n);
      const double px = 0.5 - s * dy;
      const double py = 0.5 + s * dx;

      // Parameter interval inside the unit square.
      double tmin = -std::numeric_limits<double>::infinity();
      double tmax = std::numeric_limits<double>::infinity();
      auto clip = [&](double p0, double d) {
        if (std::abs(d) < 1e-15) {
          if (p0 < 0.0 || p0 > 1.0) tmax = -tmin;
          return;
        }
        const double t0 = -p0 / d, t1 = (1.0 - p0) / d;
        tmin = std::max(tmin, std::min(t0, t1));
        tmax = std::min(tmax, std::max(t0, t1));
      };
      clip(px, dx);
      clip(py, dy);
      if (!(tmax > tmin)) {
        ++empty;
        continue;
      }

      ts.clear();
      ts.push_back(tmin);
      ts.push_back(tmax);
      for (Index k = 0; k <= n; ++k) {
        const double g = static_cast<double>(k) * h;
        if (std::abs(dx) >= 1e-15) {
          const double t = (g - px) / dx;
          if (t > tmin && t < tmax) ts.push_back(t);
        }
        if (std::abs(dy) >= 1e-15) {
          const double t = (g - py) / dy;
          if (t > tmin && t < tmax) ts.push_back(t);
        }
      }
      std::sort(ts.begin(), ts.end());

      Index last_col = -1;
      double last_len = 0.0;
      bool any = false;
      for (std::size_t q = 0; q + 1 < ts.size(); ++q) {
        const double len = ts[q + 1] - ts[q];
        if (len <= 1e-14) continue;
        const double tm = 0.5 * (ts[q] + ts[q + 1]);
        const double mx = px + tm * dx, my = py + tm * dy;
        const Index c = std::clamp(static_cast<Index>(std::floor(mx / h)), Index{0}, n - 1);
        const Index r = std::clamp(static_cast<Index>(std::floor((1.0 - my) / h)), Index{0}, n - 1);
        const Index col = r + c * n;
        if (col == last_col) {
          last_len += len;
          continue;
        }
        if (last_col >= 0) trip.push_back({row, last_col, last_len});
        last_col = col;
        last_len = len;
        any = true;
      }
      if (last_col >= 0) trip.push_back({row, last_col, last_len});
      if (!any) ++empty;
    }
  }
  if (zero_rows) *zero_rows = empty;
  return SparseMatrix::from_triplets(na * rays, n * n, trip);
}

TestProblem gen_tomo(const TomoOptions& o) {
  const Index n = o.n;
  std::vector<double> angles = o.angles;
  if (angles.empty()) {
    for (int d = 0; d < 180; ++d) angles.push_back(d);
  }
  const Index rays = o.rays > 0 ? o.rays : static_cast<Index>(std::llround(std::sqrt(2.0) * n));
  Index zero_rows = 0;
  SparseMatrix s = tomo_matrix(n, angles, rays, &zero_rows);

  TestProblem p;
  p.x = flatten(gen_phantom(o.phantom, n, o.seed));
  p.b = s.multiply(p.x);
  p.a = make_sparse(std::move(s));
  p.info.kind = ProblemKind::tomo;
  p.info.x_rows = p.info.x_cols = n;
  p.info.b_rows = rays;
  p.info.b_cols = static_cast<Index>(angles.size());
  p.info.params = {{"n", std::to_string(n)},
                   {"angles", std::to_string(angles.size())},
                   {"rays", std::to_string(rays)},
                   {"phantom", to_string(o.phantom)}};
  if (zero_rows > 0) p.info.warnings.push_back(std::to_string(zero_rows) + " rays miss the grid (zero rows)");
  return p;
}

}  // namespace regu
