#include "regu/problems.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace regu {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::blur: return "blur";
    case ProblemKind::invinterp2: return "invinterp2";
    case ProblemKind::diffusion: return "diffusion";
    case ProblemKind::nmr: return "nmr";
    case ProblemKind::tomo: return "tomo";
    case ProblemKind::identity: return "identity";
  }
  return "unknown";
}

ProblemKind problem_from_string(const std::string& name) {
  for (ProblemKind k : all_problems()) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown problem id '" + name + "'");
}

std::vector<ProblemKind> all_problems() {
  return {ProblemKind::blur, ProblemKind::invinterp2, ProblemKind::diffusion,
          ProblemKind::nmr,  ProblemKind::tomo,       ProblemKind::identity};
}

// ---------------------------------------------------------------------------
// Phantoms
// ---------------------------------------------------------------------------

const char* to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::dotk: return "dotk";
    case PhantomKind::shepplike: return "shepplike";
    case PhantomKind::smooth_bump: return "smooth_bump";
    case PhantomKind::piecewise_constant: return "piecewise_constant";
  }
  return "unknown";
}

PhantomKind phantom_from_string(const std::string& name) {
  for (PhantomKind k : {PhantomKind::dotk, PhantomKind::shepplike, PhantomKind::smooth_bump,
                        PhantomKind::piecewise_constant}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown phantom '" + name + "'");
}

namespace {

// All generators below fill an (n + 2 pad)^2 canvas whose central n x n
// block is the phantom proper.
constexpr double kFov = 1.1;
Matrix shepp_logan(Index n, Index pad) {
  struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
  };
  static constexpr Ellipse kTable[] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},          {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},  {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},     {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},     {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},   {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  const Index big = n + 2 * pad;
  Matrix img = Matrix::Zero(big, big);
  for (Index c = 0; c < big; ++c) {
    const double x = (-1.0 + (2.0 * (c - pad) + 1.0) / n) * kFov;
    for (Index r = 0; r < big; ++r) {
      const double y = (1.0 - (2.0 * (r - pad) + 1.0) / n) * kFov;
      double v = 0.0;
      for (const auto& e : kTable) {
        const double phi = e.phi_deg * M_PI / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = (dx * std::cos(phi) + dy * std::sin(phi)) / e.a;
        const double w = (-dx * std::sin(phi) + dy * std::cos(phi)) / e.b;
        if (u * u + w * w <= 1.0) v += e.value;
      }
      img(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

bool far_from(const std::vector<std::pair<Index, Index>>& placed, Index r, Index c) {
  for (const auto& [pr, pc] : placed) {
    if (std::max(std::abs(pr - r), std::abs(pc - c)) < 3) return false;
  }
  return true;
}

Matrix dotk(Index n, Index pad, std::uint64_t seed) {
  const Index k = (n + 7) / 8;
  const Index big = n + 2 * pad;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Index> pos(2, n - 3);
  std::uniform_real_distribution<double> val(0.3, 1.0);
  Matrix img = Matrix::Zero(big, big);
  std::vector<std::pair<Index, Index>> placed;
  for (int tries = 0; static_cast<Index>(placed.size()) < k && tries < 100000; ++tries) {
    const Index r = pos(gen) + pad, c = pos(gen) + pad;
    if (!far_from(placed, r, c)) continue;
    placed.emplace_back(r, c);
    img(r, c) = val(gen);
  }
  if (static_cast<Index>(placed.size()) < k) throw std::invalid_argument("dotk: image too small");
  if (pad == 0) return img;

  // Same dot density on the surrounding ring, from a separate stream.
  std::mt19937_64 ring(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Index> any(0, big - 1);
  const Index extra = (k * (big * big - n * n) + n * n / 2) / (n * n);
  Index added = 0;
  for (int tries = 0; added < extra && tries < 100000; ++tries) {
    const Index r = any(ring), c = any(ring);
    const bool inside = r >= pad && r < pad + n && c >= pad && c < pad + n;
    if (inside || !far_from(placed, r, c)) continue;
    placed.emplace_back(r, c);
    img(r, c) = val(ring);
    ++added;
  }
  return img;
}

Matrix smooth_bump(Index n, Index pad) {
  const double cr = static_cast<double>(n / 2 + pad), cc = cr;
  const double s = 0.2 * n;
  const Index big = n + 2 * pad;
  Matrix img(big, big);
  for (Index c = 0; c < big; ++c) {
    for (Index r = 0; r < big; ++r) {
      const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
      img(r, c) = std::exp(-d2 / (2.0 * s * s));
    }
  }
  return img;
}

Matrix piecewise_constant(Index n, Index pad) {
  Matrix img = Matrix::Zero(n + 2 * pad, n + 2 * pad);
  img.block(pad + n / 8, pad + n / 8, n / 4, n / 2).setConstant(0.4);
  img.block(pad + n / 2, pad + n / 4, n / 4 + n / 8, n / 4).setConstant(1.0);
  img.block(pad + n / 2, pad + 5 * n / 8, n / 4, n / 4).setConstant(0.7);
  return img;
}

}  // namespace

Matrix gen_phantom(PhantomKind kind, Index n, std::uint64_t seed) { return gen_phantom_scene(kind, n, 0, seed); }

Matrix gen_phantom_scene(PhantomKind kind, Index n, Index pad, std::uint64_t seed) {
  if (n < 8) throw std::invalid_argument("phantoms need n >= 8");
  if (pad < 0) throw std::invalid_argument("negative phantom padding");
  switch (kind) {
    case PhantomKind::dotk: return dotk(n, pad, seed);
    case PhantomKind::shepplike: return shepp_logan(n, pad);
    case PhantomKind::smooth_bump: return smooth_bump(n, pad);
    case PhantomKind::piecewise_constant: return piecewise_constant(n, pad);
  }
  throw std::invalid_argument("unknown phantom");
}

TestProblem gen_identity(Index n, PhantomKind phantom, std::uint64_t seed) {
  TestProblem p;
  p.x = flatten(gen_phantom(phantom, n, seed));
  p.a = make_identity(n * n);
  p.b = p.x;
  p.info.kind = ProblemKind::identity;
  p.info.x_rows = p.info.x_cols = p.info.b_rows = p.info.b_cols = n;
  p.info.params["n"] = std::to_string(n);
  p.info.params["phantom"] = to_string(phantom);
  return p;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gauss: return "gauss";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::multiplicative: return "multiplicative";
    case NoiseKind::logpoisson: return "logpoisson";
  }
  return "unknown";
}

NoiseKind noise_from_string(const std::string& name) {
  for (NoiseKind k : {NoiseKind::gauss, NoiseKind::laplace, NoiseKind::multiplicative, NoiseKind::logpoisson}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown noise kind '" + name + "'");
}

NoisyData add_noise(const Vector& b, const NoiseSpec& spec) {
  if (!(spec.level >= 0.0 && spec.level < 1.0)) throw std::invalid_argument("noise level must lie in [0, 1)");
  const Index m = b.size();
  const bool positive = spec.kind == NoiseKind::multiplicative || spec.kind == NoiseKind::logpoisson;
  if (positive && m > 0 && !(b.minCoeff() > 0.0)) {
    throw std::invalid_argument(std::string(to_string(spec.kind)) + " noise needs positive data");
  }
  NoisyData out;
  if (spec.level == 0.0 && spec.kind != NoiseKind::logpoisson) {
    out.bn = b;
    out.noise = Vector::Zero(m);
    return out;
  }
  std::mt19937_64 gen(spec.seed);
  Vector e(m);
  switch (spec.kind) {
    case NoiseKind::gauss:
    case NoiseKind::logpoisson: {
      std::normal_distribution<double> nd(0.0, 1.0);
      for (Index i = 0; i < m; ++i) e[i] = nd(gen);
      break;
    }
    case NoiseKind::laplace: {
      std::uniform_real_distribution<double> ud(-0.5, 0.5);
      for (Index i = 0; i < m; ++i) {
        const double u = ud(gen);
        e[i] = (u < 0.0 ? 1.0 : -1.0) * std::log1p(-2.0 * std::abs(u));
      }
      break;
    }
    case NoiseKind::multiplicative: {
      const double kappa = 1.0 / (spec.level * spec.level);
      std::gamma_distribution<double> gd(kappa, 1.0 / kappa);
      out.bn.resize(m);
      for (Index i = 0; i < m; ++i) out.bn[i] = b[i] * gd(gen);
      out.noise = out.bn - b;
      return out;
    }
  }
  if (spec.kind == NoiseKind::logpoisson) {
    out.noise = e.cwiseQuotient(b.cwiseSqrt());
  } else {
    const double en = e.norm();
    out.noise = en > 0.0 ? Vector(e * (spec.level * b.norm() / en)) : Vector::Zero(m);
  }
  out.bn = b + out.noise;
  return out;
}

// ---------------------------------------------------------------------------
// Severity
// ---------------------------------------------------------------------------

Vector singular_values(const LinearOperator& a, Index max_entries) {
  const Matrix d = densify(a, max_entries);
  Eigen::BDCSVD<Matrix> svd(d);
  return svd.singularValues();
}

std::vector<SeverityEntry> severity_scan(const std::vector<ProblemKind>& kinds, Index n) {
  std::vector<SeverityEntry> out;
  for (ProblemKind k : kinds) {
    TestProblem p;
    switch (k) {
      case ProblemKind::blur: {
        BlurOptions o;
        o.n = n;
        o.phantom = PhantomKind::smooth_bump;
        p = gen_blur(o);
        break;
      }
      case ProblemKind::invinterp2: {
        InvInterpOptions o;
        o.n = n;
        p = gen_invinterp2(o);
        break;
      }
      case ProblemKind::diffusion: {
        DiffusionOptions o;
        o.n = n;
        p = gen_diffusion(o);
        break;
      }
      case ProblemKind::nmr: {
        NmrOptions o;
        o.n1 = o.n2 = n;
        p = gen_nmr(o);
        break;
      }
      case ProblemKind::tomo: {
        TomoOptions o;
        o.n = n;
        p = gen_tomo(o);
        break;
      }
      case ProblemKind::identity: p = gen_identity(n < 8 ? 8 : n); break;
    }
    SeverityEntry e;
    e.kind = k;
    e.sigma = singular_values(*p.a);
    const Index half = std::max<Index>(std::min(p.a->rows(), p.a->cols()) / 2, 1);
    e.decay_ratio = e.sigma[0] > 0.0 ? e.sigma[half - 1] / e.sigma[0] : 0.0;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace regu
