#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "report.hpp"

int main(int argc, char** argv) {
  using namespace tilq::cli;

  CLI::App app{"Solvers and verifiers for time-inconsistent mean-field LQ control"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--tol-pinv", common.tol.pinv_rtol, "pseudoinverse singular-value cutoff")
      ->envname("TILQ_PINV_RTOL");
  app.add_option("--tol-psd", common.tol.psd_tol, "PSD eigenvalue slack")
      ->envname("TILQ_PSD_TOL");
  app.add_option("--tol-range", common.tol.range_tol, "range-membership residual slack")
      ->envname("TILQ_RANGE_TOL");
  app.add_option("--report", common.report_path, "write the run report to this file");

  SolveOpts solve;
  auto* solve_cmd = app.add_subcommand("solve", "run a backward solve and emit a policy");
  solve_cmd->add_option("--problem", solve.problem, "problem document")->required();
  solve_cmd->add_option("--kind", solve.kind, "open | feedback | mixed")->required();
  solve_cmd->add_option("--t", solve.t, "start stage");
  solve_cmd->add_option("--x", solve.x_csv, "start state (comma separated)");
  solve_cmd->add_option("--phi", solve.phi_file, "feedback-part file for mixed solves");
  solve_cmd->add_flag("--phi-random", solve.phi_random, "sample a random feedback part");
  solve_cmd->add_option("--seed", solve.seed, "seed for --phi-random");
  solve_cmd->add_option("--policy-out", solve.policy_out, "output policy file");

  ClassifyOpts classify;
  auto* classify_cmd = app.add_subcommand("classify", "existence and uniqueness verdicts");
  classify_cmd->add_option("--problem", classify.problem, "problem document")->required();
  classify_cmd->add_option("--scope", classify.scope, "fixed | all")->required();
  classify_cmd->add_option("--t", classify.t, "start stage (fixed scope)");
  classify_cmd->add_option("--x", classify.x_csv, "start state (fixed scope)");
  classify_cmd->add_option("--phi", classify.phi_file, "feedback part for the mixed verdict");
  classify_cmd->add_option("--mc-reps", classify.mc_reps, "sampled trajectories (fixed scope)");
  classify_cmd->add_option("--seed", classify.seed, "sampling seed");

  SimulateOpts simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "closed-loop Monte-Carlo runs");
  simulate_cmd->add_option("--problem", simulate.problem, "problem document")->required();
  simulate_cmd->add_option("--policy", simulate.policy, "policy file")->required();
  simulate_cmd->add_option("--t", simulate.t, "start stage");
  simulate_cmd->add_option("--x", simulate.x_csv, "start state")->required();
  simulate_cmd->add_option("--reps", simulate.reps, "replicates");
  simulate_cmd->add_option("--seed", simulate.seed, "master seed");
  simulate_cmd->add_option("--noise", simulate.noise, "gaussian | two-point");
  simulate_cmd->add_option("--out", simulate.out_dir, "output directory");
  simulate_cmd->add_flag("--long-format", simulate.long_format,
                         "one CSV with a rep column instead of per-replicate files");

  VerifyOpts verify;
  auto* verify_cmd = app.add_subcommand("verify", "equilibrium checks on the exact lattice");
  verify_cmd->add_option("--problem", verify.problem, "problem document")->required();
  verify_cmd->add_option("--policy", verify.policy, "policy file")->required();
  verify_cmd->add_option("--t", verify.t, "start stage");
  verify_cmd->add_option("--x", verify.x_csv, "start state")->required();
  verify_cmd->add_option("--depth-limit", verify.depth_limit, "max lattice depth");
  verify_cmd->add_option("--seed", verify.seed, "probe direction seed");
  verify_cmd->add_option("--probes-per-stage", verify.probes_per_stage,
                         "random deviation directions per stage");

  ReproduceOpts reproduce;
  std::uint64_t reproduce_seed = 0;
  auto* reproduce_cmd =
      app.add_subcommand("reproduce-example", "compare the built-in benchmark against its "
                                              "reference tables");
  auto* seed_opt =
      reproduce_cmd->add_option("--seed", reproduce_seed, "also solve a fresh random "
                                                          "feedback part and classify it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    common.tol.validate();
    if (solve_cmd->parsed()) return cmd_solve(common, solve);
    if (classify_cmd->parsed()) return cmd_classify(common, classify);
    if (simulate_cmd->parsed()) return cmd_simulate(common, simulate);
    if (verify_cmd->parsed()) return cmd_verify(common, verify);
    if (reproduce_cmd->parsed()) {
      if (seed_opt->count() > 0) reproduce.seed = reproduce_seed;
      return cmd_reproduce_example(common, reproduce);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitInput;
}
