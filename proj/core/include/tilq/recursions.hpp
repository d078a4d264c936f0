#pragma once

#include <stdexcept>
#include <vector>

#include "tilq/problem.hpp"

namespace tilq {

enum class SolverKind { mixed, open_loop, feedback };

/// Per-stage operators of the first-order (stationarity) and second-order
/// (convexity) conditions for a one-shot control deviation at stage k.
struct StageOperators {
  Matrix convexity;            // m x m symmetric quadratic form of the deviation
  Matrix stationarity;         // m x m coefficient of the control in the
                               // first-order condition (not symmetric in general)
  Matrix stationarity_state;   // m x n coefficient of the state
  Vector stationarity_offset;  // m affine term
  Matrix open_gain;            // m x n state coefficient of the open-loop part
  Matrix gain;                 // m x n closed-loop gain = -(stationarity)^+ stationarity_state
  Vector feedforward;          // m constant part = -(stationarity)^+ stationarity_offset

  /// Open-loop solver only: the convexity statistic with the two second-moment
  /// weightings exchanged (mean-weight on the noise channel, fluctuation-weight
  /// on the mean channel). Reproduces widely circulated reference tables for
  /// this solver; differs from `convexity` whenever the barred cost weights
  /// are nonzero. Equal to `convexity` for the other solver kinds.
  Matrix convexity_exchanged;

  double stationarity_asymmetry = 0.0;  // ||O - O^T||
  double stationarity_sv_ratio = 0.0;   // sigma_min / sigma_max
};

/// Output of one backward pass: the (k, l) table grid for k in [t0, N-1],
/// l in [k, N], the per-stage operators, and the stage gains that closed the
/// recursion. Symmetric tables are re-symmetrized after every update.
class BackwardTables {
 public:
  BackwardTables(SolverKind kind, int t0, int N, int n, int m);

  SolverKind kind() const { return kind_; }
  int start_stage() const { return t0_; }
  int horizon() const { return N_; }

  // cost-to-go weight on the realized state / on its conditional mean
  const Matrix& state_cost(int k, int l) const { return at(state_cost_, k, l); }
  const Matrix& mean_cost(int k, int l) const { return at(mean_cost_, k, l); }
  // coupling of the adjoint to the equilibrium path (realized / mean)
  const Matrix& path_coupling(int k, int l) const { return at(path_coupling_, k, l); }
  const Matrix& mean_path_coupling(int k, int l) const { return at(mean_path_coupling_, k, l); }
  // propagation of the start-state terminal coupling
  const Matrix& initial_coupling(int k, int l) const { return at(initial_coupling_, k, l); }
  // affine part of the adjoint
  const Vector& offset(int k, int l) const { return at(offset_, k, l); }

  const StageOperators& ops(int k) const;
  const Matrix& phi(int k) const;  // pure-feedback part used at stage k

  // mutable access for the solvers
  Matrix& state_cost(int k, int l) { return at(state_cost_, k, l); }
  Matrix& mean_cost(int k, int l) { return at(mean_cost_, k, l); }
  Matrix& path_coupling(int k, int l) { return at(path_coupling_, k, l); }
  Matrix& mean_path_coupling(int k, int l) { return at(mean_path_coupling_, k, l); }
  Matrix& initial_coupling(int k, int l) { return at(initial_coupling_, k, l); }
  Vector& offset(int k, int l) { return at(offset_, k, l); }
  StageOperators& ops(int k);
  void set_phi(int k, Matrix value);

 private:
  template <typename T>
  const T& at(const std::vector<std::vector<T>>& grid, int k, int l) const {
    if (k < t0_ || k >= N_ || l < k || l > N_) {
      throw std::out_of_range("table index (k,l) out of range");
    }
    return grid[k - t0_][l - k];
  }
  template <typename T>
  T& at(std::vector<std::vector<T>>& grid, int k, int l) {
    if (k < t0_ || k >= N_ || l < k || l > N_) {
      throw std::out_of_range("table index (k,l) out of range");
    }
    return grid[k - t0_][l - k];
  }

  SolverKind kind_;
  int t0_, N_;
  std::vector<std::vector<Matrix>> state_cost_, mean_cost_, path_coupling_,
      mean_path_coupling_, initial_coupling_;
  std::vector<std::vector<Vector>> offset_;
  std::vector<StageOperators> ops_;
  std::vector<Matrix> phi_;
};

/// Backward solve for a prescribed pure-feedback part phi (one m x n gain per
/// stage t0..N-1). The outer loop walks k downward; at stage k the inner
/// recursions only reference stage data and gains with index >= k+1, which is
/// what closes the double-indexed system.
BackwardTables mixed_backward(const ProblemSpec& spec, const std::vector<Matrix>& phi,
                              int t0, const Tolerances& tol = {});

/// Backward solve with zero pure-feedback part, written out as its own
/// algebraically reduced system (an independent code path from
/// mixed_backward, which the tests cross-check against it).
BackwardTables open_loop_backward(const ProblemSpec& spec, int t0,
                                  const Tolerances& tol = {});

/// Backward solve for the self-consistent pure-feedback strategy: the stage-k
/// gain is formed from its own tables and then drives all inner recursions of
/// later outer iterations. The path-coupling tables vanish identically here.
BackwardTables feedback_backward(const ProblemSpec& spec, int t0,
                                 const Tolerances& tol = {});

}  // namespace tilq
