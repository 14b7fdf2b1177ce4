// physnet command-line front end: solve / oracle / compare / validate.
//
// Exit codes: 0 success (and solver converged), 2 instance validation
// failure, 3 solver stopped at the iteration cap, 4 I/O or parse error,
// 1 unexpected internal failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "physnet/physnet.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitIo = 4;

struct InstanceArgs {
  std::string file;
  int example = 0;
};

struct EngineArgs {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> cond;
  std::optional<double> delta;
  std::optional<int> max_iters;
};

void add_instance_options(CLI::App* cmd, InstanceArgs& args) {
  auto* file = cmd->add_option("instance", args.file, "instance file path");
  auto* ex = cmd->add_option("--example", args.example, "use a built-in example (1, 2, or 3)")
                 ->check(CLI::Range(1, 3));
  file->excludes(ex);
}

void add_engine_options(CLI::App* cmd, EngineArgs& args) {
  cmd->add_option("--seed", args.seed, "conductivity initialization seed");
  cmd->add_option("--mode", args.mode, "cost update: marginal, replace, or accumulate")
      ->check(CLI::IsMember({"marginal", "replace", "accumulate"}));
  cmd->add_option("--cond", args.cond, "conductivity update: semi-implicit or raw")
      ->check(CLI::IsMember({"semi-implicit", "raw"}));
  cmd->add_option("--delta", args.delta, "termination threshold");
  cmd->add_option("--max-iters", args.max_iters, "iteration cap");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("error reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("error writing '" + path + "'");
}

physnet::NetworkInstance load_instance(const InstanceArgs& args) {
  if (args.example != 0) return physnet::builtin_example(args.example);
  if (args.file.empty())
    throw std::runtime_error("no instance given (pass a file or --example N)");
  return physnet::parse_instance(read_file(args.file));
}

void apply_engine_args(physnet::NetworkInstance& inst, const EngineArgs& args) {
  if (args.seed) inst.params.seed = *args.seed;
  if (args.mode) physnet::parse_cost_update(*args.mode, inst.params.cost_update);
  if (args.cond) physnet::parse_conductivity_update(*args.cond, inst.params.conductivity_update);
  if (args.delta) inst.params.delta = *args.delta;
  if (args.max_iters) inst.params.max_iters = *args.max_iters;
}

int run_solve(const InstanceArgs& iargs, const EngineArgs& eargs, const std::string& out_path,
              const std::string& traj_path) {
  physnet::NetworkInstance inst = load_instance(iargs);
  apply_engine_args(inst, eargs);
  if (!traj_path.empty()) inst.params.record_trajectory = true;

  physnet::Solution sol = physnet::run_solver(inst);
  if (!traj_path.empty()) write_file(traj_path, physnet::write_trajectory(sol));
  if (!out_path.empty()) {
    write_file(out_path, physnet::write_solution(sol));
    std::cout << "instance: " << (inst.name.empty() ? "(unnamed)" : inst.name) << "\n"
              << "converged: " << (sol.converged ? "yes" : "no") << "\n"
              << "iterations: " << sol.iterations << "\n"
              << "objective: " << physnet::fmt_fixed(sol.objective) << "\n"
              << "solution: " << out_path << "\n";
  } else {
    std::cout << physnet::write_solution(sol);
  }
  if (!sol.converged) {
    std::cerr << "solver stopped at the iteration cap without converging\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_oracle(const InstanceArgs& iargs, double tol) {
  physnet::NetworkInstance inst = load_instance(iargs);
  physnet::OracleResult res = physnet::frank_wolfe_solve(inst, tol);
  std::cout << "objective," << physnet::fmt_fixed(res.objective) << "\n"
            << "kkt_gap," << physnet::fmt_fixed(res.kkt_gap) << "\n"
            << "iterations," << res.iterations << "\n"
            << "converged," << (res.converged ? 1 : 0) << "\n"
            << "link,flow\n";
  for (std::size_t a = 0; a < res.flows.size(); ++a)
    std::cout << a << "," << physnet::fmt_fixed(res.flows[a]) << "\n";
  if (!res.converged) {
    std::cerr << "oracle did not reach the requested tolerance\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_compare(const InstanceArgs& iargs, const EngineArgs& eargs, double tol) {
  physnet::NetworkInstance inst = load_instance(iargs);
  apply_engine_args(inst, eargs);
  physnet::Solution sol = physnet::run_solver(inst);
  physnet::OracleResult orc = physnet::frank_wolfe_solve(inst, tol);
  physnet::CompareReport report = physnet::compare(sol, orc);
  std::cout << "engine_objective," << physnet::fmt_fixed(sol.objective) << "\n"
            << "engine_converged," << (sol.converged ? 1 : 0) << "\n"
            << "engine_iterations," << sol.iterations << "\n"
            << "oracle_objective," << physnet::fmt_fixed(orc.objective) << "\n"
            << "oracle_converged," << (orc.converged ? 1 : 0) << "\n"
            << "oracle_kkt_gap," << physnet::fmt_fixed(orc.kkt_gap) << "\n"
            << report.to_string();
  if (!sol.converged || !orc.converged) {
    std::cerr << "at least one solver did not converge\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_validate(const InstanceArgs& iargs) {
  physnet::NetworkInstance inst = load_instance(iargs);
  // parse_instance already validated; report the essentials
  std::cout << "valid: " << inst.n_nodes << " nodes, " << inst.links.size() << " links, "
            << inst.demands.size() << " retailers, total demand "
            << physnet::fmt_shortest(inst.total_demand()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-total-cost supply network design via flux-adaptive dynamics"};
  app.require_subcommand(1);

  InstanceArgs solve_inst, oracle_inst, compare_inst, validate_inst;
  EngineArgs solve_engine, compare_engine;
  std::string out_path, traj_path;
  double oracle_tol = 1e-6, compare_tol = 1e-6;

  CLI::App* solve = app.add_subcommand("solve", "design the network with the adaptive solver");
  add_instance_options(solve, solve_inst);
  add_engine_options(solve, solve_engine);
  solve->add_option("--out", out_path, "write the solution table here (default: stdout)");
  solve->add_option("--trajectory", traj_path, "record per-iteration flux and write it here");

  CLI::App* oracle = app.add_subcommand("oracle", "solve with the convex reference method");
  add_instance_options(oracle, oracle_inst);
  oracle->add_option("--tol", oracle_tol, "relative optimality gap tolerance");

  CLI::App* cmp = app.add_subcommand("compare", "run both solvers and print the deviation report");
  add_instance_options(cmp, compare_inst);
  add_engine_options(cmp, compare_engine);
  cmp->add_option("--tol", compare_tol, "oracle tolerance");

  CLI::App* validate = app.add_subcommand("validate", "check an instance file");
  add_instance_options(validate, validate_inst);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitIo;
  }

  try {
    if (app.got_subcommand(solve)) return run_solve(solve_inst, solve_engine, out_path, traj_path);
    if (app.got_subcommand(oracle)) return run_oracle(oracle_inst, oracle_tol);
    if (app.got_subcommand(cmp)) return run_compare(compare_inst, compare_engine, compare_tol);
    if (app.got_subcommand(validate)) return run_validate(validate_inst);
  } catch (const physnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const physnet::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const physnet::SingularSystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
