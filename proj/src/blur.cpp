#include "regu/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace regu {

const char* to_string(PsfKind kind) {
  switch (kind) {
    case PsfKind::gauss: return "gauss";
    case PsfKind::defocus: return "defocus";
    case PsfKind::motion: return "motion";
    case PsfKind::shake: return "shake";
  }
  return "unknown";
}

PsfKind psf_from_string(const std::string& name) {
  for (PsfKind k : {PsfKind::gauss, PsfKind::defocus, PsfKind::motion, PsfKind::shake}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown PSF kind '" + name + "'");
}

const char* to_string(BlurLevel level) {
  switch (level) {
    case BlurLevel::mild: return "mild";
    case BlurLevel::medium: return "medium";
    case BlurLevel::severe: return "severe";
  }
  return "unknown";
}

BlurLevel blur_level_from_string(const std::string& name) {
  for (BlurLevel l : {BlurLevel::mild, BlurLevel::medium, BlurLevel::severe}) {
    if (name == to_string(l)) return l;
  }
  throw std::invalid_argument("unknown blur level '" + name + "'");
}

double psf_parameter(PsfKind kind, BlurLevel level, Index n) {
  const int i = static_cast<int>(level);
  static constexpr double kAt256[4][3] = {{1, 2, 4}, {2, 4, 8}, {8, 16, 32}, {8, 16, 32}};
  static constexpr double kFloor[4][3] = {{1, 2, 3}, {1, 2, 3}, {3, 5, 7}, {4, 6, 8}};
  const int k = static_cast<int>(kind);
  return std::max(kFloor[k][i], kAt256[k][i] * static_cast<double>(n) / 256.0);
}

namespace {

void require_support(Index reach, Index n) {
  if (reach > n / 2 - 1) {
    throw std::invalid_argument("PSF support of half-width " + std::to_string(reach) +
                                " does not fit an image of size " + std::to_string(n));
  }
}

}  // namespace

Matrix gen_psf(PsfKind kind, Index n, BlurLevel level, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("gen_psf needs n >= 3");
  const double p = psf_parameter(kind, level, n);
  const auto [cr, cc] = psf_center(n);
  Matrix psf = Matrix::Zero(n, n);
  switch (kind) {
    case PsfKind::gauss: {
      const auto reach = static_cast<Index>(std::ceil(3.0 * p));
      require_support(reach, n);
      for (Index dc = -reach; dc <= reach; ++dc) {
        for (Index dr = -reach; dr <= reach; ++dr) {
          if (dr * dr + dc * dc > reach * reach) continue;
          psf(cr + dr, cc + dc) = std::exp(-static_cast<double>(dr * dr + dc * dc) / (2.0 * p * p));
        }
      }
      break;
    }
    case PsfKind::defocus: {
      const auto reach = static_cast<Index>(std::floor(p));
      require_support(reach, n);
      for (Index dc = -reach; dc <= reach; ++dc) {
        for (Index dr = -reach; dr <= reach; ++dr) {
          if (static_cast<double>(dr * dr + dc * dc) <= p * p) psf(cr + dr, cc + dc) = 1.0;
        }
      }
      break;
    }
    case PsfKind::motion: {
      const auto len = static_cast<Index>(std::llround(p));
      const Index lo = -(len - 1) / 2;
      const Index hi = lo + len - 1;
      require_support(std::max(-lo, hi), n);
      // 45 degree line: up and to the right.
      for (Index t = lo; t <= hi; ++t) psf(cr - t, cc + t) = 1.0;
      break;
    }
    case PsfKind::shake: {
      const auto steps = static_cast<Index>(std::llround(p));
      std::mt19937_64 gen(seed);
      std::uniform_int_distribution<int> dir(0, 7);
      static constexpr int kMoves[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
      std::vector<std::pair<Index, Index>> path{{0, 0}};
      for (Index s = 0; s < steps; ++s) {
        const int d = dir(gen);
        path.emplace_back(path.back().first + kMoves[d][0], path.back().second + kMoves[d][1]);
      }
      double mr = 0.0, mc = 0.0;
      for (const auto& [r, c] : path) {
        mr += static_cast<double>(r);
        mc += static_cast<double>(c);
      }
      const auto sr = static_cast<Index>(std::llround(mr / static_cast<double>(path.size())));
      const auto sc = static_cast<Index>(std::llround(mc / static_cast<double>(path.size())));
      Index reach = 0;
      for (const auto& [r, c] : path) reach = std::max({reach, std::abs(r - sr), std::abs(c - sc)});
      require_support(reach, n);
      for (const auto& [r, c] : path) psf(cr + r - sr, cc + c - sc) += 1.0;
      break;
    }
  }
  psf /= psf.sum();
  return psf;
}

namespace {

/// Pad an n x n image by `pad` on every side with a constant.
Matrix pad_constant(const Matrix& img, Index pad, double value) {
  Matrix big = Matrix::Constant(img.rows() + 2 * pad, img.cols() + 2 * pad, value);
  big.block(pad, pad, img.rows(), img.cols()) = img;
  return big;
}

Matrix generate_scene(const BlurOptions& o, Index pad) {
  if (o.image) {
    if (o.image->rows() != o.n || o.image->cols() != o.n) {
      throw DimensionError("blur image must be n x n");
    }
    return pad_constant(*o.image, pad, o.image->mean());
  }
  return gen_phantom_scene(o.phantom, o.n, pad, o.seed);
}

}  // namespace

TestProblem gen_blur(const BlurOptions& o) {
  const Index n = o.n;
  const Matrix psf = gen_psf(o.psf, n, o.level, o.seed);
  auto a = std::make_shared<ConvolutionOperator>(psf, psf_center(n), n, n, o.boundary);
  const Index pad = a->half_width();

  TestProblem p;
  if (o.commit_crime) {
    Matrix img = o.image ? *o.image : gen_phantom(o.phantom, n, o.seed);
    if (img.rows() != n || img.cols() != n) throw DimensionError("blur image must be n x n");
    p.x = flatten(img);
    p.b = a->apply(p.x);
  } else {
    // Blur a larger scene and keep the middle, so the data carries
    // information from outside the field of view.
    const Matrix scene = generate_scene(o, pad);
    const Index big = n + 2 * pad;
    const ConvolutionOperator full(psf, psf_center(n), big, big, Boundary::zero);
    const Matrix blurred = unflatten(full.apply(flatten(scene)), big, big);
    p.x = flatten(scene.block(pad, pad, n, n));
    p.b = flatten(blurred.block(pad, pad, n, n));
  }
  p.a = a;
  p.info.kind = ProblemKind::blur;
  p.info.x_rows = p.info.x_cols = p.info.b_rows = p.info.b_cols = n;
  p.info.psf = psf;
  p.info.params = {{"n", std::to_string(n)},
                   {"psf", to_string(o.psf)},
                   {"blur_level", to_string(o.level)},
                   {"boundary", to_string(o.boundary)},
                   {"commit_crime", o.commit_crime ? "true" : "false"},
                   {"phantom", o.image ? "user" : to_string(o.phantom)}};
  return p;
}

}  // namespace regu
