#pragma once

#include <optional>
#include <vector>

#include "tilq/recursions.hpp"

namespace tilq {

/// Stagewise control rule u_k = feedback_part * X_k + open_gain * Xstar_k +
/// feedforward, where Xstar is the equilibrium path. Along its own closed
/// loop the two state arguments coincide, so u_k = gain * X_k + feedforward.
struct EquilibriumPolicy {
  SolverKind kind = SolverKind::mixed;
  int t0 = 0;
  std::vector<Matrix> feedback_part;  // m x n per stage
  std::vector<Matrix> open_gain;      // m x n per stage
  std::vector<Matrix> gain;           // feedback_part + open_gain
  std::vector<Vector> feedforward;    // m per stage

  int stages() const { return static_cast<int>(gain.size()); }
  const Matrix& K(int k) const { return gain.at(k - t0); }
  const Vector& c(int k) const { return feedforward.at(k - t0); }
};

EquilibriumPolicy build_policy(const BackwardTables& tables);

enum class Verdict { yes, no, state_dependent };
const char* to_string(Verdict v);

/// Per-stage diagnostics for one solver family.
struct StageConditions {
  std::vector<double> convexity_min_eig;     // of the deviation quadratic form
  std::vector<double> range_residual_state;  // || O O^+ L - L ||
  std::vector<double> range_residual_offset; // || O O^+ theta - theta ||
  std::vector<double> stationarity_sv_ratio; // sigma_min/sigma_max of O
  bool convexity_ok = false;
  bool ranges_ok = false;
};

struct ExistenceReport {
  enum class Scope { fixed_pair, all_pairs };
  Scope scope = Scope::all_pairs;
  int t = 0;
  std::optional<Vector> x;

  StageConditions open, feedback;
  std::optional<StageConditions> mixed;  // present when a feedback part was supplied

  Verdict open_exists = Verdict::no;
  Verdict feedback_exists = Verdict::no;
  std::optional<Verdict> mixed_exists_for_given_phi;
  Verdict open_unique = Verdict::no;
  Verdict feedback_unique = Verdict::no;
  bool H_holds = false;

  // fixed-pair sampling evidence for the state-dependent range condition
  int sampled_trajectories = 0;
  int sampled_violations = 0;
};

struct ClassifyOptions {
  int mc_trajectories = 256;  // fixed-pair sampling replicates
  std::uint64_t seed = 0x7f4a7c15u;
};

/// Existence classification. all_pairs scope evaluates the operator
/// identities (deviation form PSD at every stage; L and theta in the range of
/// the stationarity operator) for every start stage. fixed_pair additionally
/// needs x; when the all_pairs identities hold the verdict is yes outright,
/// otherwise the range condition is checked along sampled equilibrium
/// trajectories and zero violations yield state_dependent.
ExistenceReport classify_existence(const ProblemSpec& spec, ExistenceReport::Scope scope,
                                   int t, const std::optional<Vector>& x,
                                   const std::optional<std::vector<Matrix>>& phi,
                                   const Tolerances& tol = {}, const ClassifyOptions& opt = {});

struct UniquenessReport {
  Verdict open_unique = Verdict::no;
  Verdict feedback_unique = Verdict::no;
  std::vector<double> open_convexity_min_eig;
  std::vector<double> open_stationarity_sv_ratio;
  std::vector<double> feedback_convexity_min_eig;
};

/// Unique existence: open-loop needs the reduced system solvable (deviation
/// form PSD at every stage) plus an invertible stationarity operator at every
/// stage; the feedback strategy is unique iff its deviation form is PD at
/// every stage.
UniquenessReport uniqueness_check(const ProblemSpec& spec, int t, const Tolerances& tol = {});

struct PositivityReport {
  bool state_weights_psd = false;      // Q
  bool mean_state_weights_psd = false; // Q + Q_bar
  bool terminal_psd = false;           // G
  bool mean_terminal_psd = false;      // G + G_bar
  bool control_weights_pd = false;     // R
  bool mean_control_weights_pd = false;// R + R_bar
  bool all = false;  // implies a unique feedback strategy for every start pair
};

PositivityReport assumption_H_check(const ProblemSpec& spec, const Tolerances& tol = {});

/// First-order condition residual at stage k for state value X:
/// O_k (gain X + feedforward) + L_k X + theta_k.
Vector stationarity_residual(const EquilibriumPolicy& policy, const BackwardTables& tables,
                             const Vector& X, int k);

/// singular-value cutoff used for "stationarity operator is invertible",
/// aligned with the pinv cutoff so invertibility and pinv-as-inverse agree.
inline constexpr double kInvertibilityRtol = 1e-10;

}  // namespace tilq
