#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tilq/linalg.hpp"

namespace tilq::cli {

struct CommonOpts {
  Tolerances tol;
  std::string report_path;  // empty: stdout only
};

struct SolveOpts {
  std::string problem;
  std::string kind;  // open | feedback | mixed
  int t = 0;
  std::optional<std::string> x_csv;
  std::optional<std::string> phi_file;
  bool phi_random = false;
  std::uint64_t seed = 1;
  std::string policy_out = "policy.json";
};

struct ClassifyOpts {
  std::string problem;
  std::string scope;  // fixed | all
  int t = 0;
  std::optional<std::string> x_csv;
  std::optional<std::string> phi_file;
  int mc_reps = 256;
  std::uint64_t seed = 0x7f4a7c15u;
};

struct SimulateOpts {
  std::string problem;
  std::string policy;
  int t = 0;
  std::string x_csv;
  int reps = 1;
  std::uint64_t seed = 1;
  std::string noise = "gaussian";  // gaussian | two-point
  std::string out_dir = ".";
  bool long_format = false;
};

struct VerifyOpts {
  std::string problem;
  std::string policy;
  int t = 0;
  std::string x_csv;
  int depth_limit = 12;
  std::uint64_t seed = 7;
  int probes_per_stage = 3;
};

struct ReproduceOpts {
  std::optional<std::uint64_t> seed;  // extra random feedback-part sample
};

int cmd_solve(const CommonOpts& common, const SolveOpts& opts);
int cmd_classify(const CommonOpts& common, const ClassifyOpts& opts);
int cmd_simulate(const CommonOpts& common, const SimulateOpts& opts);
int cmd_verify(const CommonOpts& common, const VerifyOpts& opts);
int cmd_reproduce_example(const CommonOpts& common, const ReproduceOpts& opts);

}  // namespace tilq::cli
