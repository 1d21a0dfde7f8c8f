#pragma once

#include "regu/linop.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace regu {

enum class ProblemKind { blur, invinterp2, diffusion, nmr, tomo, identity };

const char* to_string(ProblemKind kind);
ProblemKind problem_from_string(const std::string& name);
std::vector<ProblemKind> all_problems();

struct ProblemInfo {
  ProblemKind kind = ProblemKind::identity;
  /// Shape of the solution and data arrays (column-major flattening).
  Index x_rows = 0;
  Index x_cols = 0;
  Index b_rows = 0;
  Index b_cols = 0;
  std::optional<Matrix> psf;
  /// Generator parameters in printable form.
  std::map<std::string, std::string> params;
  std::vector<std::string> warnings;
};

struct TestProblem {
  OperatorPtr a;
  Vector b;  // noise-free data
  Vector x;  // true solution
  ProblemInfo info;
};

// ---------------------------------------------------------------------------
// Phantoms
// ---------------------------------------------------------------------------

enum class PhantomKind { dotk, shepplike, smooth_bump, piecewise_constant };

const char* to_string(PhantomKind kind);
PhantomKind phantom_from_string(const std::string& name);

/// n x n image with values in [0, 1].
Matrix gen_phantom(PhantomKind kind, Index n, std::uint64_t seed = 0);

/// The same phantom on a field of view enlarged by `pad` pixels on each side.
/// The central n x n block equals gen_phantom(kind, n, seed).
Matrix gen_phantom_scene(PhantomKind kind, Index n, Index pad, std::uint64_t seed = 0);

inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
inline Matrix unflatten(const Vector& v, Index rows, Index cols) {
  check_length(v, rows * cols, "unflatten");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

// ---------------------------------------------------------------------------
// Deblurring
// ---------------------------------------------------------------------------

enum class PsfKind { gauss, defocus, motion, shake };
enum class BlurLevel { mild, medium, severe };

const char* to_string(PsfKind kind);
PsfKind psf_from_string(const std::string& name);
const char* to_string(BlurLevel level);
BlurLevel blur_level_from_string(const std::string& name);

/// Size parameter of a PSF (sigma, radius, length or walk steps) at image size n.
/// The n = 256 values scale linearly with n and are bounded below so that
/// small images still blur.
double psf_parameter(PsfKind kind, BlurLevel level, Index n);

/// n x n nonnegative PSF summing to 1, centered at pixel (n/2, n/2).
Matrix gen_psf(PsfKind kind, Index n, BlurLevel level, std::uint64_t seed = 0);

/// Pixel that a PSF generated by gen_psf maps onto itself.
inline std::pair<Index, Index> psf_center(Index n) { return {n / 2, n / 2}; }

struct BlurOptions {
  Index n = 256;
  PsfKind psf = PsfKind::gauss;
  BlurLevel level = BlurLevel::medium;
  Boundary boundary = Boundary::reflective;
  bool commit_crime = false;
  PhantomKind phantom = PhantomKind::shepplike;
  /// Overrides the phantom when set (n x n).
  std::optional<Matrix> image;
  std::uint64_t seed = 0;
};

TestProblem gen_blur(const BlurOptions& o);

// ---------------------------------------------------------------------------
// Inverse interpolation
// ---------------------------------------------------------------------------

enum class InterpMethod { nearest, linear };
const char* to_string(InterpMethod m);
InterpMethod interp_from_string(const std::string& name);

/// phi(s, t) = sin(pi s) sin(pi t / 2).
double interp_test_function(double s, double t);

/// Rows of interpolation weights from the n x n grid on [0,1]^2 (node (r, c)
/// at s = c/(n-1), t = r/(n-1)) to the given (s, t) points.
SparseMatrix interpolation_matrix(Index n, const std::vector<std::pair<double, double>>& points,
                                  InterpMethod method);

struct InvInterpOptions {
  Index n = 128;
  InterpMethod method = InterpMethod::linear;
  std::uint64_t seed = 0;
};

TestProblem gen_invinterp2(const InvInterpOptions& o);

// ---------------------------------------------------------------------------
// Inverse diffusion
// ---------------------------------------------------------------------------

struct DiffusionOptions {
  Index n = 128;
  double t_final = 0.01;
  Index t_steps = 100;
};

/// P1 mass and stiffness matrices on the uniform triangulation of [0,1]^2
/// with n x n nodes.
std::pair<SparseMatrix, SparseMatrix> diffusion_fem_matrices(Index n);

/// Smooth initial condition used as true solution (sum-normalized).
Vector diffusion_initial_condition(Index n);

TestProblem gen_diffusion(const DiffusionOptions& o);

// ---------------------------------------------------------------------------
// NMR relaxometry
// ---------------------------------------------------------------------------

struct NmrOptions {
  Index n1 = 128;
  Index n2 = 128;
  /// 0 means 2 * n.
  Index m1 = 0;
  Index m2 = 0;
  std::pair<double, double> t_log_limits{-4.0, 1.0};
  std::pair<double, double> tau_log_limits{-4.0, 1.0};
  std::string material = "carbonate";
};

Vector logspace(double lo, double hi, Index count);

/// Gaussian mixture over (log10 T1, log10 T2), n1 x n2, sum-normalized.
Matrix nmr_phantom(const std::string& material, const Vector& t1, const Vector& t2);
std::vector<std::string> nmr_materials();

TestProblem gen_nmr(const NmrOptions& o);

// ---------------------------------------------------------------------------
// Parallel-beam tomography
// ---------------------------------------------------------------------------

struct TomoOptions {
  Index n = 128;
  std::vector<double> angles;  // degrees; empty means 0, 1, ..., 179
  Index rays = 0;              // 0 means round(sqrt(2) n)
  PhantomKind phantom = PhantomKind::shepplike;
  std::uint64_t seed = 0;
};

/// Intersection-length matrix of parallel rays with the n x n pixel grid on
/// [0,1]^2 (row 0 at the top). Ray i of angle a is row i + a * rays; its
/// signed offset from the center is (i - (rays - 1)/2) / n.
SparseMatrix tomo_matrix(Index n, const std::vector<double>& angles_deg, Index rays,
                         Index* zero_rows = nullptr);

TestProblem gen_tomo(const TomoOptions& o);

/// Identity operator on an n x n phantom; b = x.
TestProblem gen_identity(Index n, PhantomKind phantom = PhantomKind::shepplike, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { gauss, laplace, multiplicative, logpoisson };
const char* to_string(NoiseKind k);
NoiseKind noise_from_string(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gauss;
  double level = 0.01;
  std::uint64_t seed = 0;
};

struct NoisyData {
  Vector bn;
  Vector noise;
};

NoisyData add_noise(const Vector& b, const NoiseSpec& spec);

// ---------------------------------------------------------------------------
// Severity
// ---------------------------------------------------------------------------

/// Singular values (descending) of the densified operator.
Vector singular_values(const LinearOperator& a, Index max_entries = 4'000'000);

struct SeverityEntry {
  ProblemKind kind;
  Vector sigma;
  /// sigma_{N/2} / sigma_1.
  double decay_ratio = 0.0;
};

/// Default-option problems of each kind at grid size n.
std::vector<SeverityEntry> severity_scan(const std::vector<ProblemKind>& kinds, Index n);

}  // namespace regu
