#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "report.hpp"
#include "tilq/example.hpp"
#include "tilq/simulate.hpp"
#include "tilq/verify.hpp"

namespace tilq::cli {

namespace {

using nlohmann::json;

Vector parse_csv_vector(const std::string& csv, int expected) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    vals.push_back(std::stod(item));
  }
  if (static_cast<int>(vals.size()) != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) +
                                " comma-separated values, got " + std::to_string(vals.size()));
  }
  Vector v(expected);
  for (int i = 0; i < expected; ++i) v(i) = vals[i];
  return v;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json doc;
  in >> doc;
  return doc;
}

std::vector<Matrix> load_phi(const std::string& path, int n, int m, int stages) {
  const json doc = load_json_file(path);
  if (!doc.contains("Phi") || !doc["Phi"].is_array()) {
    throw std::invalid_argument("phi file: missing stage array \"Phi\"");
  }
  const auto& arr = doc["Phi"];
  if (static_cast<int>(arr.size()) < stages) {
    throw std::invalid_argument("phi file: fewer stage entries than required");
  }
  std::vector<Matrix> phi;
  const int offset = static_cast<int>(arr.size()) - stages;  // allow a longer table; use the tail
  for (int s = 0; s < stages; ++s) {
    const auto& jm = arr[offset + s];
    Matrix M(m, n);
    if (!jm.is_array() || static_cast<int>(jm.size()) != m) {
      throw std::invalid_argument("phi file: wrong gain row count");
    }
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) M(r, c) = jm[r][c].get<double>();
    }
    phi.push_back(std::move(M));
  }
  return phi;
}

std::vector<Matrix> random_phi(int n, int m, int stages, std::uint64_t seed) {
  RngStream rng(seed, 0xF1);
  std::vector<Matrix> phi;
  phi.reserve(stages);
  for (int s = 0; s < stages; ++s) {
    Matrix M(m, n);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) M(r, c) = rng.normal();
    }
    phi.push_back(std::move(M));
  }
  return phi;
}

json tolerances_json(const Tolerances& tol) {
  return json{{"pinv_rtol", tol.pinv_rtol}, {"psd_tol", tol.psd_tol},
              {"range_tol", tol.range_tol}};
}

json conditions_json(const StageConditions& sc) {
  json j;
  j["convexity_min_eig"] = sc.convexity_min_eig;
  j["range_residual_state"] = sc.range_residual_state;
  j["range_residual_offset"] = sc.range_residual_offset;
  j["stationarity_sv_ratio"] = sc.stationarity_sv_ratio;
  j["convexity_ok"] = sc.convexity_ok;
  j["ranges_ok"] = sc.ranges_ok;
  return j;
}

json existence_json(const ExistenceReport& rep) {
  json j;
  j["scope"] = rep.scope == ExistenceReport::Scope::all_pairs ? "all" : "fixed";
  j["t"] = rep.t;
  if (rep.x) j["x"] = vector_json(*rep.x);
  j["open"] = conditions_json(rep.open);
  j["feedback"] = conditions_json(rep.feedback);
  if (rep.mixed) j["mixed"] = conditions_json(*rep.mixed);
  j["open_exists"] = to_string(rep.open_exists);
  j["feedback_exists"] = to_string(rep.feedback_exists);
  if (rep.mixed_exists_for_given_phi) {
    j["mixed_exists_for_given_phi"] = to_string(*rep.mixed_exists_for_given_phi);
  }
  j["open_unique"] = to_string(rep.open_unique);
  j["feedback_unique"] = to_string(rep.feedback_unique);
  j["H_holds"] = rep.H_holds;
  j["sampled_trajectories"] = rep.sampled_trajectories;
  j["sampled_violations"] = rep.sampled_violations;
  return j;
}

void emit_report(const CommonOpts& common, json report) {
  const std::string text = report.dump(2);
  if (!common.report_path.empty()) {
    write_file_atomic(common.report_path, text);
  }
  std::cout << text << "\n";
}

}  // namespace

int cmd_solve(const CommonOpts& common, const SolveOpts& opts) {
  Stopwatch timer;
  const ProblemSpec spec = load_problem_file(opts.problem);
  const int N = spec.horizon();
  if (opts.t < 0 || opts.t >= N) throw std::invalid_argument("--t outside horizon");

  std::optional<std::vector<Matrix>> phi;
  std::optional<Vector> x;
  if (opts.x_csv) x = parse_csv_vector(*opts.x_csv, spec.n());

  BackwardTables tables = [&] {
    if (opts.kind == "open") return open_loop_backward(spec, opts.t, common.tol);
    if (opts.kind == "feedback") return feedback_backward(spec, opts.t, common.tol);
    if (opts.kind == "mixed") {
      if (opts.phi_file) {
        phi = load_phi(*opts.phi_file, spec.n(), spec.m(), N - opts.t);
      } else if (opts.phi_random) {
        phi = random_phi(spec.n(), spec.m(), N - opts.t, opts.seed);
      } else {
        throw std::invalid_argument("mixed solve needs --phi FILE or --phi-random");
      }
      return mixed_backward(spec, *phi, opts.t, common.tol);
    }
    throw std::invalid_argument("--kind must be open, feedback, or mixed");
  }();

  const EquilibriumPolicy policy = build_policy(tables);
  const auto scope =
      x ? ExistenceReport::Scope::fixed_pair : ExistenceReport::Scope::all_pairs;
  const ExistenceReport existence =
      classify_existence(spec, scope, opts.t, x, phi, common.tol);

  Verdict requested = Verdict::no;
  if (opts.kind == "open") requested = existence.open_exists;
  if (opts.kind == "feedback") requested = existence.feedback_exists;
  if (opts.kind == "mixed") requested = existence.mixed_exists_for_given_phi.value();

  write_file_atomic(opts.policy_out, policy_json(policy).dump(2));

  json report;
  report["command"] = "solve";
  report["parameters"] = {{"problem", opts.problem}, {"kind", opts.kind}, {"t", opts.t},
                          {"policy_out", opts.policy_out}};
  if (opts.phi_file) report["parameters"]["phi"] = *opts.phi_file;
  if (opts.phi_random) report["parameters"]["seed"] = opts.seed;
  report["problem_fingerprint"] = fingerprint_file(opts.problem);
  report["tolerances"] = tolerances_json(common.tol);
  report["operators"] = operator_summary(tables);
  report["existence"] = existence_json(existence);
  report["requested_kind_exists"] = to_string(requested);
  report["timing_ms"] = timer.ms();
  emit_report(common, std::move(report));

  return requested == Verdict::no ? kExitNoSolution : kExitOk;
}

int cmd_classify(const CommonOpts& common, const ClassifyOpts& opts) {
  Stopwatch timer;
  const ProblemSpec spec = load_problem_file(opts.problem);
  if (opts.t < 0 || opts.t >= spec.horizon()) throw std::invalid_argument("--t outside horizon");

  ExistenceReport::Scope scope;
  if (opts.scope == "all") {
    scope = ExistenceReport::Scope::all_pairs;
  } else if (opts.scope == "fixed") {
    scope = ExistenceReport::Scope::fixed_pair;
  } else {
    throw std::invalid_argument("--scope must be fixed or all");
  }

  std::optional<Vector> x;
  if (opts.x_csv) x = parse_csv_vector(*opts.x_csv, spec.n());
  std::optional<std::vector<Matrix>> phi;
  if (opts.phi_file) {
    phi = load_phi(*opts.phi_file, spec.n(), spec.m(),
                   spec.horizon() - (scope == ExistenceReport::Scope::all_pairs ? 0 : opts.t));
  }

  ClassifyOptions copt;
  copt.mc_trajectories = opts.mc_reps;
  copt.seed = opts.seed;
  const ExistenceReport existence =
      classify_existence(spec, scope, opts.t, x, phi, common.tol, copt);

  json report;
  report["command"] = "classify";
  report["parameters"] = {{"problem", opts.problem}, {"scope", opts.scope}, {"t", opts.t}};
  report["problem_fingerprint"] = fingerprint_file(opts.problem);
  report["tolerances"] = tolerances_json(common.tol);
  report["existence"] = existence_json(existence);
  report["timing_ms"] = timer.ms();
  emit_report(common, std::move(report));
  return kExitOk;
}

int cmd_simulate(const CommonOpts& common, const SimulateOpts& opts) {
  Stopwatch timer;
  const ProblemSpec spec = load_problem_file(opts.problem);
  const EquilibriumPolicy policy =
      policy_from_json(load_json_file(opts.policy), spec.n(), spec.m());
  const Vector x = parse_csv_vector(opts.x_csv, spec.n());
  NoiseVariant noise;
  if (opts.noise == "gaussian") {
    noise = NoiseVariant::gaussian;
  } else if (opts.noise == "two-point") {
    noise = NoiseVariant::two_point;
  } else {
    throw std::invalid_argument("--noise must be gaussian or two-point");
  }

  const auto trajs = simulate_closed_loop(spec, policy, opts.t, x, noise, opts.reps, opts.seed);

  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  std::vector<std::string> files;
  if (opts.long_format) {
    const std::string path = (fs::path(opts.out_dir) / "trajectories.csv").string();
    write_trajectories_long_csv(path, spec, trajs);
    files.push_back(path);
  } else {
    for (const auto& traj : trajs) {
      char name[32];
      std::snprintf(name, sizeof(name), "run_%05d.csv", traj.rep);
      const std::string path = (fs::path(opts.out_dir) / name).string();
      write_trajectory_csv(path, spec, traj);
      files.push_back(path);
    }
  }

  // summary statistics: per-stage mean and covariance, realized cost estimate
  const int N = spec.horizon();
  const int steps = N - opts.t;
  std::vector<Vector> mean(steps + 1, Vector::Zero(spec.n()));
  for (const auto& traj : trajs) {
    for (int s = 0; s <= steps; ++s) mean[s] += traj.states[s] / trajs.size();
  }
  std::vector<Matrix> cov(steps + 1, Matrix::Zero(spec.n(), spec.n()));
  for (const auto& traj : trajs) {
    for (int s = 0; s <= steps; ++s) {
      const Vector dev = traj.states[s] - mean[s];
      cov[s] += dev * dev.transpose() / std::max<size_t>(1, trajs.size() - 1);
    }
  }
  // realized cost per replicate from the start-stage weights
  std::vector<double> costs;
  costs.reserve(trajs.size());
  for (const auto& traj : trajs) {
    double c = 0;
    for (int s = 0; s < steps; ++s) {
      const StageCoeffs& sd = spec.stage(opts.t, opts.t + s);
      c += traj.states[s].dot(sd.Q * traj.states[s]) +
           traj.controls[s].dot(sd.R * traj.controls[s]) + 2 * sd.q.dot(traj.states[s]) +
           2 * sd.rho.dot(traj.controls[s]);
    }
    const TerminalCoeffs& tc = spec.terminal(opts.t);
    c += traj.states[steps].dot(tc.G * traj.states[steps]) +
         2 * (tc.F * x + tc.g).dot(traj.states[steps]);
    costs.push_back(c);
  }
  double cost_mean = 0;
  for (double c : costs) cost_mean += c / costs.size();
  double cost_var = 0;
  for (double c : costs) cost_var += (c - cost_mean) * (c - cost_mean);
  cost_var /= std::max<size_t>(1, costs.size() - 1);
  const double cost_se = std::sqrt(cost_var / costs.size());

  const MomentRun exact = moment_propagation(spec, policy, opts.t, x);

  json report;
  report["command"] = "simulate";
  report["parameters"] = {{"problem", opts.problem}, {"policy", opts.policy},
                          {"t", opts.t},           {"reps", opts.reps},
                          {"seed", opts.seed},     {"noise", opts.noise},
                          {"out", opts.out_dir},   {"long_format", opts.long_format}};
  report["problem_fingerprint"] = fingerprint_file(opts.problem);
  report["files"] = files;
  json stages = json::array();
  for (int s = 0; s <= steps; ++s) {
    stages.push_back(json{{"stage", opts.t + s},
                          {"mean", vector_json(mean[s])},
                          {"covariance", matrix_json(cov[s])},
                          {"exact_mean", vector_json(exact.mean[s])}});
  }
  report["stages"] = std::move(stages);
  // pathwise running-cost average: an estimate of the cost without the
  // conditional-mean terms; the exact affine-policy cost is reported alongside
  report["cost_estimate"] = {{"mean", cost_mean}, {"standard_error", cost_se}};
  report["exact_cost"] = exact.cost;
  report["timing_ms"] = timer.ms();
  emit_report(common, std::move(report));
  return kExitOk;
}

int cmd_verify(const CommonOpts& common, const VerifyOpts& opts) {
  Stopwatch timer;
  const ProblemSpec spec = load_problem_file(opts.problem);
  const EquilibriumPolicy policy =
      policy_from_json(load_json_file(opts.policy), spec.n(), spec.m());
  const Vector x = parse_csv_vector(opts.x_csv, spec.n());
  const int N = spec.horizon();
  if (N - opts.t > opts.depth_limit) {
    std::cerr << "verification lattice depth " << (N - opts.t) << " exceeds limit "
              << opts.depth_limit << "\n";
    return kExitResource;
  }

  // Rebuild tables for the policy's feedback part so that probe predictions
  // come from the same backward pass that a solve would produce.
  std::vector<Matrix> phi(policy.feedback_part.begin() + (opts.t - policy.t0),
                          policy.feedback_part.end());
  const BackwardTables tables = mixed_backward(spec, phi, opts.t, common.tol);

  RngStream rng(opts.seed, 0xA5);
  json probes = json::array();
  double worst_linear = 0, worst_quadratic = 0, worst_fit = 0, worst_jtilde = 0;
  for (int k = opts.t; k < N; ++k) {
    for (int rep = 0; rep < opts.probes_per_stage; ++rep) {
      Vector dir(spec.m());
      for (int i = 0; i < spec.m(); ++i) dir(i) = rng.normal();
      const PerturbationProbe probe =
          check_cost_difference(spec, tables, opts.t, x, k, dir, {-1.0, -0.5, 0.5, 1.0});
      worst_linear = std::max(worst_linear, probe.max_linear_dev);
      worst_quadratic = std::max(worst_quadratic, probe.max_quadratic_dev);
      worst_fit = std::max(worst_fit, probe.max_fit_residual);
      const double jt = check_jtilde_identity(
          spec, std::vector<Matrix>(phi.begin() + (k - opts.t), phi.end()), k, dir, common.tol);
      worst_jtilde = std::max(worst_jtilde, jt);
      probes.push_back(json{{"stage", k},
                            {"direction", vector_json(dir)},
                            {"max_linear_dev", probe.max_linear_dev},
                            {"max_quadratic_dev", probe.max_quadratic_dev},
                            {"max_fit_residual", probe.max_fit_residual},
                            {"jtilde_residual", jt}});
    }
  }

  json inequalities = json::array();
  bool inequality_pass = true;
  double worst_margin = 0;
  for (int k = opts.t; k < N; ++k) {
    const InequalityCheck chk = check_definition_inequality(spec, policy, opts.t, x, k);
    inequality_pass = inequality_pass && chk.pass;
    worst_margin = std::min(worst_margin, chk.worst_margin);
    inequalities.push_back(json{{"stage", k},
                                {"pass", chk.pass},
                                {"worst_margin", chk.worst_margin},
                                {"violations", chk.violations},
                                {"nodes", chk.nodes_checked},
                                {"candidates_per_node", chk.candidates_per_node}});
  }

  const bool probes_pass = worst_linear <= 1e-8 && worst_quadratic <= 1e-8;

  json report;
  report["command"] = "verify";
  report["parameters"] = {{"problem", opts.problem}, {"policy", opts.policy}, {"t", opts.t},
                          {"depth_limit", opts.depth_limit}, {"seed", opts.seed}};
  report["problem_fingerprint"] = fingerprint_file(opts.problem);
  report["tolerances"] = tolerances_json(common.tol);
  report["probes"] = std::move(probes);
  report["probe_summary"] = {{"max_linear_dev", worst_linear},
                             {"max_quadratic_dev", worst_quadratic},
                             {"max_fit_residual", worst_fit},
                             {"max_jtilde_residual", worst_jtilde},
                             {"pass", probes_pass}};
  report["definition_inequality"] = std::move(inequalities);
  report["definition_inequality_pass"] = inequality_pass;
  report["verdict"] = (probes_pass && inequality_pass) ? "pass" : "fail";
  report["timing_ms"] = timer.ms();
  emit_report(common, std::move(report));
  return kExitOk;
}

int cmd_reproduce_example(const CommonOpts& common, const ReproduceOpts& opts) {
  Stopwatch timer;
  const ProblemSpec spec = builtin_example();
  const double tol = 1e-3;
  double worst_gated = 0.0;
  json rows = json::array();

  auto add_row = [&](const std::string& name, const std::vector<double>& got,
                     const std::vector<double>& expected, bool gated) {
    double dev = 0;
    json jg = json::array(), je = json::array(), jd = json::array();
    for (size_t i = 0; i < expected.size(); ++i) {
      const double d = std::abs(got[i] - expected[i]);
      dev = std::max(dev, d);
      jg.push_back(got[i]);
      je.push_back(expected[i]);
      jd.push_back(d);
    }
    if (gated) worst_gated = std::max(worst_gated, dev);
    rows.push_back(json{{"name", name},
                        {"computed", jg},
                        {"reference", je},
                        {"abs_dev", jd},
                        {"max_abs_dev", dev},
                        {"gated", gated},
                        {"match", dev <= tol}});
  };

  const BackwardTables open_tb = open_loop_backward(spec, 0, common.tol);
  std::vector<double> open_main, open_exch;
  for (int k = 0; k < 4; ++k) {
    open_main.push_back(open_tb.ops(k).convexity(0, 0));
    open_exch.push_back(open_tb.ops(k).convexity_exchanged(0, 0));
  }
  const auto open_ref = example_open_convexity_reference();
  const std::vector<double> open_ref_v(open_ref.begin(), open_ref.end());
  add_row("open convexity (exchanged weighting)", open_exch, open_ref_v, true);
  add_row("open convexity (solver)", open_main, open_ref_v, false);

  const BackwardTables fb_tb = feedback_backward(spec, 0, common.tol);
  std::vector<double> fb_main;
  for (int k = 0; k < 4; ++k) fb_main.push_back(fb_tb.ops(k).convexity(0, 0));
  const auto fb_ref = example_feedback_convexity_reference();
  add_row("feedback convexity (solver)", fb_main,
          std::vector<double>(fb_ref.begin(), fb_ref.end()), true);

  const auto& cases = example_mixed_cases();
  for (size_t i = 0; i < cases.size(); ++i) {
    const BackwardTables tb = mixed_backward(spec, cases[i].phi, 0, common.tol);
    std::vector<double> conv, stat;
    for (int k = 0; k < 4; ++k) {
      conv.push_back(tb.ops(k).convexity(0, 0));
      stat.push_back(tb.ops(k).stationarity(0, 0));
    }
    const std::string tag = "mixed case " + std::to_string(i + 1);
    add_row(tag + " convexity",
            conv, std::vector<double>(cases[i].convexity.begin(), cases[i].convexity.end()),
            true);
    add_row(tag + " stationarity", stat,
            std::vector<double>(cases[i].stationarity.begin(), cases[i].stationarity.end()),
            true);
  }

  {
    const BackwardTables tb = mixed_backward(spec, cases.back().phi, 0, common.tol);
    const auto gains = example_last_case_gains();
    std::vector<double> got, expd;
    for (int k = 0; k < 4; ++k) {
      for (int c = 0; c < 2; ++c) {
        got.push_back(tb.ops(k).gain(0, c));
        expd.push_back(gains[k][c]);
      }
    }
    add_row("last case closed-loop gains", got, expd, true);
  }

  json report;
  report["command"] = "reproduce-example";
  report["tolerance"] = tol;
  report["rows"] = std::move(rows);
  report["worst_gated_dev"] = worst_gated;
  report["all_matched"] = worst_gated <= tol;

  if (opts.seed) {
    const auto phi = random_phi(spec.n(), spec.m(), spec.horizon(), *opts.seed);
    const BackwardTables tb = mixed_backward(spec, phi, 0, common.tol);
    bool convex = true, invertible = true;
    json sampled = json::array();
    for (int k = 0; k < spec.horizon(); ++k) {
      const double conv = tb.ops(k).convexity(0, 0);
      convex = convex && conv > 0;
      invertible = invertible && tb.ops(k).stationarity_sv_ratio > kInvertibilityRtol;
      sampled.push_back(json{{"stage", k},
                             {"phi", matrix_json(phi[k])},
                             {"convexity", conv},
                             {"stationarity", tb.ops(k).stationarity(0, 0)}});
    }
    report["sampled_phi"] = {{"seed", *opts.seed},
                             {"stages", std::move(sampled)},
                             {"convexity_all_positive", convex},
                             {"stationarity_all_invertible", invertible},
                             {"admissible", convex && invertible}};
  }

  report["timing_ms"] = timer.ms();
  emit_report(common, std::move(report));
  return worst_gated <= tol ? kExitOk : kExitMismatch;
}

}  // namespace tilq::cli
