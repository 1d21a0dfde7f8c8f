#include "regu/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int print_defaults(const std::string& id) {
  try {
    const regu::SolverId s = regu::solver_from_string(id);
    std::cout << "[solver." << id << "]\n";
    for (const auto& [k, v] : regu::solver_defaults(s)) std::cout << k << " = " << v << '\n';
    return 0;
  } catch (const std::invalid_argument&) {
  }
  try {
    const regu::ProblemKind p = regu::problem_from_string(id);
    std::cout << "[problem]\nkind = " << id << '\n';
    for (const auto& [k, v] : regu::problem_defaults(p)) std::cout << k << " = " << v << '\n';
    return 0;
  } catch (const std::invalid_argument&) {
  }
  std::cerr << "unknown id '" << id << "'\nsolvers:";
  for (regu::SolverId s : regu::all_solvers()) std::cerr << ' ' << regu::to_string(s);
  std::cerr << "\nproblems:";
  for (regu::ProblemKind p : regu::all_problems()) std::cerr << ' ' << regu::to_string(p);
  std::cerr << '\n';
  return 1;
}

void print_list() {
  std::cout << "solvers:";
  for (regu::SolverId s : regu::all_solvers()) std::cout << ' ' << regu::to_string(s);
  std::cout << "\nproblems:";
  for (regu::ProblemKind p : regu::all_problems()) std::cout << ' ' << regu::to_string(p);
  std::cout << "\nnmr materials:";
  for (const std::string& m : regu::nmr_materials()) std::cout << ' ' << m;
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative regularization experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", config, "Config file")->required();

  std::string id;
  auto* defaults = app.add_subcommand("defaults", "Print the default options of a solver or problem");
  defaults->add_option("id", id, "Solver or problem id")->required();

  auto* list = app.add_subcommand("list", "List solvers, problems and materials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*run) return regu::run_config_file(config, std::cout, std::cerr);
  if (*defaults) return print_defaults(id);
  if (*list) print_list();
  return 0;
}
