#pragma once

#include "regu/problems.hpp"
#include "regu/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regu {

/// Invalid configuration. `block()` names the offending section.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string block, const std::string& message);
  const std::string& block() const { return block_; }

private:
  std::string block_;
};

// ---------------------------------------------------------------------------
// Config text
// ---------------------------------------------------------------------------

struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

/// `[section]` headers and `key = value` lines. `#` and `;` start comments.
/// Keys before the first header are rejected.
std::vector<IniSection> parse_ini(std::istream& in);

using OptionMap = std::map<std::string, std::string>;

struct SolverBlock {
  /// Section suffix; names the output files.
  std::string name;
  SolverId id = SolverId::cgls;
  SolveOptions options;
  IterSet k;
  /// Attach the problem's true solution so error norms are logged.
  bool use_x_true = true;
  /// Raw entries, resolved against the problem once it exists.
  OptionMap raw;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::blur;
  OptionMap problem_options;
  std::optional<NoiseSpec> noise;
  std::vector<SolverBlock> solvers;
  std::string output_dir = "output";
  bool images = true;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Every option of a problem generator with its default, in config syntax.
std::vector<std::pair<std::string, std::string>> problem_defaults(ProblemKind kind);

/// Runs a generator with options given in config syntax.
TestProblem build_problem(ProblemKind kind, const OptionMap& options);

/// Resolves a solver block's options against a generated problem
/// (regularization matrices, enrichment basis, x0, true solution).
SolveOptions resolve_solver_options(const SolverBlock& block, const TestProblem& problem);

/// Executes problem -> noise -> solvers and writes CSV, summary and PGM files.
/// Returns 0 on success, 1 for configuration errors and 2 for solver errors.
/// REGU_OUTPUT_DIR, when set, replaces the output directory.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int run_config_file(const std::string& path, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

/// Columns k, Rnrm, then Enrm, NE_Rnrm and lambda when logged; %.17g, LF.
std::string convergence_csv(const IterationInfo& info);

/// Summary text with StopReg.It, BestReg.It and StopFlag.
std::string summary_text(const std::string& block, SolverId id, const SolveResult& r);

/// Linear map min -> 0, max -> 255; a constant array maps to 128.
std::vector<std::uint8_t> quantize_image(const Vector& values);

/// Binary PGM (P5, maxval 255), written row by row from a column-major array.
void write_pgm(const std::string& path, const Vector& values, Index rows, Index cols);

struct PgmImage {
  Index rows = 0;
  Index cols = 0;
  /// Row-major pixels.
  std::vector<std::uint8_t> pixels;
};

PgmImage read_pgm(const std::string& path);

}  // namespace regu
