#pragma once

#include "tilq/simulate.hpp"

namespace tilq {

/// One-shot deviation probe at stage k: the conditional cost difference D(l)
/// under control u_k + l * direction is exactly quadratic in the scale l.
/// The linear coefficient must match twice the stationarity residual paired
/// with the direction, the quadratic coefficient the deviation form.
struct PerturbationProbe {
  int stage = 0;
  std::vector<double> scales;                     // l grid
  std::vector<std::vector<double>> differences;   // per depth-k node, per l
  std::vector<double> fitted_linear;              // per node
  std::vector<double> fitted_quadratic;           // per node
  std::vector<double> fit_residual;               // worst off-parabola gap per node
  std::vector<double> predicted_linear;           // 2 <residual, direction>
  std::vector<double> predicted_quadratic;        // direction^T convexity direction
  double max_linear_dev = 0.0;
  double max_quadratic_dev = 0.0;
  double max_fit_residual = 0.0;
};

/// Measures D(l) on the exact lattice for a deterministic direction (same
/// vector at every depth-k node).
PerturbationProbe check_cost_difference(const ProblemSpec& spec, const BackwardTables& tables,
                                        int t, const Vector& x, int k, const Vector& direction,
                                        const std::vector<double>& scales);

/// Per-node directions (one per depth-k node), exercising noise-history
/// dependent deviations.
PerturbationProbe check_cost_difference(const ProblemSpec& spec, const BackwardTables& tables,
                                        int t, const Vector& x, int k,
                                        const std::vector<Vector>& directions,
                                        const std::vector<double>& scales);

/// Propagates the pure perturbation state on the lattice (zero start, kicked
/// by the direction at stage k) and sums its quadratic cost; returns the gap
/// to direction^T convexity_k direction. The two routes are independent: the
/// lattice knows nothing about the backward tables.
double check_jtilde_identity(const ProblemSpec& spec, const std::vector<Matrix>& phi, int k,
                             const Vector& direction, const Tolerances& tol = {});

struct InequalityCheck {
  bool pass = false;
  double worst_margin = 0.0;  // min over nodes/candidates of (deviated - baseline)
  int nodes_checked = 0;
  int candidates_per_node = 0;
  int violations = 0;
};

/// Verifies at every depth-k node that no one-shot control replacement from
/// the candidate grid lowers the exact conditional cost below the policy's
/// own (margin tolerance `slack`). Grid: `grid_points` values per control
/// coordinate, spanning [grid_lo, grid_hi].
InequalityCheck check_definition_inequality(const ProblemSpec& spec,
                                            const EquilibriumPolicy& policy, int t,
                                            const Vector& x, int k, int grid_points = 5,
                                            double grid_lo = -2.0, double grid_hi = 2.0,
                                            double slack = 1e-9);

struct ReductionReport {
  double zero_phi_max_dev = 0.0;        // mixed(phi = 0) vs open-loop tables/operators
  double self_consistent_max_path = 0.0;    // ||path couplings|| under phi = feedback gains
  double self_consistent_max_gain = 0.0;    // ||open_gain|| under phi = feedback gains
  double self_consistent_max_ops_dev = 0.0; // stationarity ops vs feedback deviation form
};

/// Runs all three solvers and cross-checks the two specializations: zero
/// feedback part reduces the mixed system to the open-loop one, and the
/// self-consistent gains annihilate the path couplings and the open-loop part.
ReductionReport cross_check_reductions(const ProblemSpec& spec, int t,
                                       const Tolerances& tol = {});

}  // namespace tilq
