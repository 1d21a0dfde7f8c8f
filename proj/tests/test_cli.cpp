#include "regu/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace regu;
namespace fs = std::filesystem;

namespace {

struct Output {
  int code = 0;
  std::string text;
};

/// Runs the regu binary and captures stdout and stderr together.
Output run_binary(const std::string& args) {
  const std::string cmd = std::string(REGU_BINARY) + ' ' + args + " 2>&1";
  Output o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) o.text.append(buf, got);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("regu_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run_in(ExperimentConfig cfg, const fs::path& dir) {
  cfg.output_dir = dir.string();
  std::ostringstream out, err;
  RunResult r;
  r.code = run_experiment(cfg, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Column `name` of a convergence CSV.
std::vector<double> csv_column(const std::string& csv, const std::string& name) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
  const auto col = std::find(header.begin(), header.end(), name) - header.begin();
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell;
    for (long i = 0; i <= col; ++i) std::getline(ls, cell, ',');
    values.push_back(std::stod(cell));
  }
  return values;
}

std::string summary_value(const std::string& summary, const std::string& key) {
  std::istringstream in(summary);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  }
  return {};
}

class CliEnv : public ::testing::Environment {
public:
  void SetUp() override { ::unsetenv("REGU_OUTPUT_DIR"); }
};

const auto* const kEnv = ::testing::AddGlobalTestEnvironment(new CliEnv);

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

TEST(Ini, SectionsCommentsAndWhitespace) {
  std::istringstream in("# top\n[problem]\n kind = blur ; trailing\n\n[solver.a]\nMaxIter=7\n");
  const auto s = parse_ini(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].name, "problem");
  EXPECT_EQ(s[0].entries[0], std::make_pair(std::string("kind"), std::string("blur")));
  EXPECT_EQ(s[1].entries[0].second, "7");
}

TEST(Ini, MalformedLinesNameTheLine) {
  std::istringstream a("[problem]\nkind blur\n");
  try {
    parse_ini(a);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream b("kind = blur\n");
  EXPECT_THROW(parse_ini(b), ConfigError);
}

TEST(Config, SolverBlocksAndKRanges) {
  const ExperimentConfig c = parse(
      "[problem]\nkind = blur\nn = 16\n"
      "[noise]\nkind = laplace\nlevel = 0.02\nseed = 3\n"
      "[solver.first]\nsolver = hybrid_lsqr\nRegParam = discrep\nNoiseLevel = 0.02\nK = 1, 5:5:20\n"
      "[solver.cgls]\nMaxIter = 12\n");
  EXPECT_EQ(c.problem, ProblemKind::blur);
  ASSERT_TRUE(c.noise.has_value());
  EXPECT_EQ(c.noise->kind, NoiseKind::laplace);
  EXPECT_EQ(c.noise->seed, 3u);
  ASSERT_EQ(c.solvers.size(), 2u);
  EXPECT_EQ(c.solvers[0].id, SolverId::hybrid_lsqr);
  EXPECT_EQ(c.solvers[0].k, (IterSet{1, 5, 10, 15, 20}));
  EXPECT_EQ(c.solvers[0].options.max_iter, 20);
  EXPECT_EQ(c.solvers[0].options.reg_param->kind, RegParamKind::discrep);
  EXPECT_EQ(c.solvers[1].id, SolverId::cgls);
  EXPECT_EQ(c.solvers[1].options.max_iter, 12);
}

TEST(Config, ErrorsNameTheBlock) {
  const auto block_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      return e.block();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(block_of("[problem]\nkind = blur\n[solver.x]\nsolver = nope\n"), "solver.x");
  EXPECT_EQ(block_of("[problem]\nkind = blur\n[solver.x]\nsolver = cgls\nMaxIter = -3\n"), "solver.x");
  EXPECT_EQ(block_of("[problem]\nkind = blur\n[solver.x]\nsolver = cgls\nbogus = 1\n"), "solver.x");
  EXPECT_EQ(block_of("[problem]\nkind = volcano\n[solver.cgls]\n"), "problem");
  EXPECT_EQ(block_of("[problem]\nkind = blur\n[noise]\nlevel = 2\n[solver.cgls]\n"), "noise");
  EXPECT_NE(block_of("[solver.cgls]\n"), "<none>");
  EXPECT_NE(block_of("[problem]\nkind = blur\n"), "<none>");
  EXPECT_NE(block_of("[problem]\nkind = blur\n[solver.cgls]\n[solver.cgls]\n"), "<none>");
}

TEST(Config, SizeGuardrail) {
  const ExperimentConfig c = parse("[problem]\nkind = blur\nn = 4096\n[solver.cgls]\n");
  try {
    build_problem(c.problem, c.problem_options);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.block(), "problem");
  }
  std::ostringstream out, err;
  EXPECT_EQ(run_experiment(c, out, err), 1);
}

TEST(Config, AutoAndNoneMeanDefault) {
  const ExperimentConfig c = parse("[problem]\nkind = tomo\nn = 8\nrays = auto\n[solver.sirt]\nxMin = none\nK = auto\n");
  EXPECT_FALSE(c.solvers[0].options.x_min.has_value());
  EXPECT_TRUE(c.solvers[0].k.empty());
  EXPECT_EQ(build_problem(c.problem, c.problem_options).a->rows(), 180 * 11);
}

TEST(Defaults, DocumentedValues) {
  const auto has = [](const std::vector<std::pair<std::string, std::string>>& kv, const std::string& k,
                      const std::string& v) {
    return std::find(kv.begin(), kv.end(), std::make_pair(k, v)) != kv.end();
  };
  EXPECT_TRUE(has(solver_defaults(SolverId::cgls), "MaxIter", "100"));
  EXPECT_TRUE(has(problem_defaults(ProblemKind::blur), "boundary", "reflective"));
  EXPECT_TRUE(has(problem_defaults(ProblemKind::nmr), "Tloglimits", "[-4, 1]"));
}

TEST(Defaults, EveryListingParsesBack) {
  for (SolverId id : all_solvers()) {
    std::ostringstream text;
    text << "[problem]\nkind = blur\nn = 16\n[solver." << to_string(id) << "]\n";
    for (const auto& [k, v] : solver_defaults(id)) text << k << " = " << v << '\n';
    EXPECT_NO_THROW(parse(text.str())) << to_string(id);
  }
  for (ProblemKind kind : all_problems()) {
    OptionMap opts;
    for (const auto& [k, v] : problem_defaults(kind)) opts[k] = v;
    std::ostringstream text;
    text << "[problem]\nkind = " << to_string(kind) << '\n';
    for (const auto& [k, v] : opts) text << k << " = " << v << '\n';
    text << "[solver.cgls]\n";
    EXPECT_NO_THROW(parse(text.str())) << to_string(kind);
  }
}

TEST(Binary, DefaultsAndList) {
  Output o = run_binary("defaults cgls");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.text.find("MaxIter = 100\n"), std::string::npos);
  o = run_binary("defaults blur");
  EXPECT_NE(o.text.find("boundary = reflective\n"), std::string::npos);
  o = run_binary("defaults nmr");
  EXPECT_NE(o.text.find("Tloglimits = [-4, 1]\n"), std::string::npos);
  o = run_binary("defaults quasar");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.text.find("hybrid_lsqr"), std::string::npos);
  EXPECT_NE(o.text.find("invinterp2"), std::string::npos);
  o = run_binary("list");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.text.find("carbonate"), std::string::npos);
  EXPECT_EQ(run_binary("").code, 1);
  EXPECT_EQ(run_binary("run /nonexistent/file.ini").code, 1);
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

TEST(Pgm, QuantizationRule) {
  EXPECT_EQ(quantize_image((Vector(4) << 0, 1, 1, 0).finished()), (std::vector<std::uint8_t>{0, 255, 255, 0}));
  EXPECT_EQ(quantize_image(Vector::Constant(5, -3.2)), std::vector<std::uint8_t>(5, 128));
  EXPECT_EQ(quantize_image((Vector(3) << -1, 0, 1).finished())[1], 128);
}

TEST(Pgm, RoundTripAndOrientation) {
  const fs::path dir = scratch("pgm");
  const Index rows = 3, cols = 5;
  Vector v(rows * cols);
  for (Index i = 0; i < v.size(); ++i) v[i] = std::sin(0.7 * static_cast<double>(i));
  const std::string path = (dir / "a.pgm").string();
  write_pgm(path, v, rows, cols);
  const PgmImage img = read_pgm(path);
  EXPECT_EQ(img.rows, rows);
  EXPECT_EQ(img.cols, cols);
  const auto q = quantize_image(v);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) EXPECT_EQ(img.pixels[r * cols + c], q[r + c * rows]);
  }
  EXPECT_EQ(slurp(path).substr(0, 2), "P5");
  EXPECT_THROW(write_pgm(path, v, 4, 4), std::exception);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

TEST(Experiment, OutputFilesAndCsvColumns) {
  const fs::path dir = scratch("files");
  const ExperimentConfig c = parse(
      "[problem]\nkind = blur\nn = 16\n[noise]\nlevel = 0.02\nseed = 1\n"
      "[solver.h]\nsolver = hybrid_lsqr\nMaxIter = 10\nNoStop = true\n");
  const RunResult r = run_in(c, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"x_true.pgm", "b_noisy.pgm", "h.csv", "h_summary.txt", "h_stop.pgm", "h_best.pgm"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string csv = slurp(dir / "h.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,Rnrm,Enrm,lambda");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv_column(csv, "k").size(), 10u);
  const std::string sum = slurp(dir / "h_summary.txt");
  EXPECT_EQ(summary_value(sum, "StopReg.It"), "10");
  EXPECT_FALSE(summary_value(sum, "BestReg.It").empty());
  EXPECT_FALSE(summary_value(sum, "StopFlag").empty());
}

TEST(Experiment, CsvDigitsAreLossless) {
  IterationInfo info;
  info.rnrm = {0.1, 1.0 / 3.0};
  info.its = 2;
  const std::string csv = convergence_csv(info);
  EXPECT_EQ(csv, "k,Rnrm\n1,0.10000000000000001\n2,0.33333333333333331\n");
}

TEST(Experiment, SolverErrorsExitTwoAndNameBlock) {
  const fs::path dir = scratch("errors");
  // Diffusion has no adjoint; cgls needs one.
  RunResult r = run_in(parse("[problem]\nkind = diffusion\nn = 6\n[solver.bad]\nsolver = cgls\n"), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("[solver.bad]"), std::string::npos) << r.err;
  // ART needs explicit rows: an option/operator mismatch is a configuration error.
  r = run_in(parse("[problem]\nkind = diffusion\nn = 6\n[solver.rows]\nsolver = art\n"), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("[solver.rows]"), std::string::npos) << r.err;
  // Transpose-free solvers run.
  r = run_in(parse("[problem]\nkind = diffusion\nn = 6\n[solver.rr]\nsolver = rrgmres\nMaxIter = 5\n"), dir);
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Experiment, OutputDirectoryFromEnvironment) {
  const fs::path a = scratch("env_a"), b = scratch("env_b");
  ExperimentConfig c = parse("[problem]\nkind = identity\nn = 8\n[solver.cgls]\nMaxIter = 3\n");
  ::setenv("REGU_OUTPUT_DIR", b.c_str(), 1);
  const RunResult r = run_in(c, a);
  ::unsetenv("REGU_OUTPUT_DIR");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(fs::exists(a / "cgls.csv"));
  EXPECT_TRUE(fs::exists(b / "cgls.csv"));
}

TEST(Bundled, BlurCglsShowsSemiConvergence) {
  const fs::path dir = scratch("exblur_cgls");
  const RunResult r = run_in(load_config(std::string(REGU_CONFIG_DIR) + "/exblur_cgls.ini"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto enrm = csv_column(slurp(dir / "cgls.csv"), "Enrm");
  const auto best = std::min_element(enrm.begin(), enrm.end()) - enrm.begin();
  EXPECT_GT(best, 0);
  EXPECT_LT(best + 1, static_cast<long>(enrm.size()));
  EXPECT_GT(enrm.back(), enrm[static_cast<std::size_t>(best)]);

  // The discrepancy block stops at the first iterate below eta * NL.
  const auto rn = csv_column(slurp(dir / "cgls_dp.csv"), "Rnrm");
  const std::string sum = slurp(dir / "cgls_dp_summary.txt");
  const long stop = std::stol(summary_value(sum, "StopReg.It"));
  EXPECT_LE(rn[static_cast<std::size_t>(stop - 1)], 1.01 * 0.01);
  for (long k = 1; k < stop; ++k) EXPECT_GT(rn[static_cast<std::size_t>(k - 1)], 1.01 * 0.01);
  EXPECT_EQ(summary_value(sum, "StopFlag"), "discrepancy");
}

TEST(Bundled, IdentityStopsByNormalEquationResidual) {
  const fs::path dir = scratch("exidentity");
  const RunResult r = run_in(load_config(std::string(REGU_CONFIG_DIR) + "/exidentity.ini"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string sum = slurp(dir / "cgls_summary.txt");
  EXPECT_EQ(summary_value(sum, "StopReg.It"), "1");
  EXPECT_EQ(summary_value(sum, "StopFlag"), "ne_residual");
}

TEST(Bundled, EveryConfigRerunsByteIdentically) {
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(REGU_CONFIG_DIR)) {
    if (e.path().extension() == ".ini") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  ASSERT_GE(configs.size(), 6u);
  for (const fs::path& cfg : configs) {
    const std::string stem = cfg.stem().string();
    const fs::path a = scratch(stem + "_1"), b = scratch(stem + "_2");
    ASSERT_EQ(run_in(load_config(cfg.string()), a).code, 0) << stem;
    ASSERT_EQ(run_in(load_config(cfg.string()), b).code, 0) << stem;
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << stem << '/' << e.path().filename();
    }
    EXPECT_GT(files, 0u) << stem;
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
