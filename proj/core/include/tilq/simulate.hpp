#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tilq/equilibrium.hpp"

namespace tilq {

enum class NoiseVariant { gaussian, two_point };

/// Deterministic per-stream generator: one master seed, streams split by a
/// counter so replicate r is independent of how many replicates run before it.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);
  double uniform01();  // in (0, 1)
  double normal();     // standard normal, Box-Muller, platform-stable
  int bit();           // fair coin

 private:
  std::uint64_t next_raw();
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Trajectory {
  int t0 = 0;
  std::uint64_t seed = 0;
  int rep = 0;
  std::vector<Vector> states;    // X_t0 .. X_N
  std::vector<Vector> controls;  // u_t0 .. u_{N-1}
  std::vector<Vector> noises;    // w_t0 .. w_{N-1} (p-vectors)
};

/// Simulates the closed loop u_k = gain_k X_k + feedforward_k under the
/// composite (equilibrium-path) dynamics. Gaussian noise draws have the
/// per-stage second moment from the spec; two_point requires p = 1 and draws
/// +-sqrt(delta_k) with equal probability.
std::vector<Trajectory> simulate_closed_loop(const ProblemSpec& spec,
                                             const EquilibriumPolicy& policy, int t,
                                             const Vector& x, NoiseVariant noise, int reps,
                                             std::uint64_t seed);

struct MomentRun {
  int t0 = 0;
  std::vector<Vector> mean;           // E X_l, l = t0..N
  std::vector<Matrix> second_moment;  // E X_l X_l^T
  double cost = 0.0;                  // exact cost of the affine policy from (t0, x)
};

/// Exact propagation of the first two moments of the state under
/// u = gain X + feedforward, and the exact cost assembled from trace
/// identities. The state follows the start-stage dynamics family and the
/// conditional means reduce to the mean recursion because x is deterministic.
MomentRun moment_propagation(const ProblemSpec& spec, const EquilibriumPolicy& policy, int t,
                             const Vector& x);

/// Exhaustive two-branch noise lattice rooted at (t0, x): level d holds 2^d
/// nodes for stage t0 + d; every conditional expectation is an exact weighted
/// average over a subtree slice. Requires p = 1 and depth N - t0 <= 12.
class NoiseTree {
 public:
  NoiseTree(const ProblemSpec& spec, int t0, Vector x);

  int root_stage() const { return t0_; }
  int depth() const { return depth_; }
  int level_size(int d) const { return 1 << d; }
  double node_prob(int d) const;

  /// Noise value realized on the transition into level d (d >= 1).
  double draw(int d, int j) const;

  /// Equilibrium states along the lattice; available after attach_policy_states.
  const Vector& state(int d, int j) const;
  bool has_states() const { return !states_.empty(); }

  /// Propagates the closed loop u = gain X + feedforward node by node with
  /// the composite dynamics, storing a state per node.
  void attach_policy_states(const ProblemSpec& spec, const EquilibriumPolicy& policy);

 private:
  const ProblemSpec* spec_;
  int t0_, depth_;
  Vector root_;
  std::vector<std::vector<double>> draws_;   // per level 1..depth
  std::vector<std::vector<Vector>> states_;  // per level 0..depth
};

/// Control assignment for tree evaluations: maps (stage, global node index at
/// that stage's level, propagated state) to the control vector. Per-node
/// values make the assignment measurable with respect to the noise history.
using TreeControl = std::function<Vector(int stage, int node, const Vector& state)>;

/// Exact conditional cost from stage k at the lattice node `node` (level
/// k - root_stage). The state starts at the node's attached value, follows the
/// (k, l) dynamics family, and every conditional mean (state, control, and the
/// mean-field cost terms) is an exact subtree average.
double tree_cost(const ProblemSpec& spec, const NoiseTree& tree, int k, int node,
                 const TreeControl& control);

/// Writes one CSV per replicate: header stage,x1..xn,u1..um,w1..wp.
/// Controls/noises are blank on the terminal row.
void write_trajectory_csv(const std::string& path, const ProblemSpec& spec,
                          const Trajectory& traj);

/// Long-format CSV with a leading rep column, all replicates in one file.
void write_trajectories_long_csv(const std::string& path, const ProblemSpec& spec,
                                 const std::vector<Trajectory>& trajs);

}  // namespace tilq
