#pragma once

#include <string>
#include <vector>

#include "tilq/linalg.hpp"

namespace tilq {

/// Coefficients of one (t, k) index pair: the dynamics and running cost seen
/// at stage k by the subproblem that starts at stage t. Plain members act on
/// the realized state/control, *_bar members on their stage-t conditional
/// means. Noise-channel families (C, D, d) hold one entry per channel.
struct StageCoeffs {
  Matrix A, A_bar;              // n x n
  Matrix B, B_bar;              // n x m
  std::vector<Matrix> C, C_bar; // p of n x n
  std::vector<Matrix> D, D_bar; // p of n x m
  Vector f;                     // n
  std::vector<Vector> d;        // p of n
  Matrix Q, Q_bar;              // n x n, symmetric
  Matrix R, R_bar;              // m x m, symmetric
  Vector q;                     // n
  Vector rho;                   // m
};

/// Terminal-cost data of the subproblem starting at stage t.
struct TerminalCoeffs {
  Matrix G, G_bar;  // n x n, symmetric
  Matrix F;         // n x n (couples the start state to the terminal mean)
  Vector g;         // n
};

/// Componentwise sums plain + bar, the coefficients that drive conditional
/// means and the equilibrium path.
struct CompositeCoeffs {
  Matrix A, B;
  std::vector<Matrix> C, D;
  Matrix Q, R;
};

/// Immutable problem data: dimensions, the (t, k) grid of stage coefficients
/// for 0 <= t <= k < N, per-t terminal data, and per-stage noise second
/// moments. Symmetric weights are re-symmetrized on construction; asymmetry
/// beyond 1e-9 or a non-PSD noise moment is rejected.
class ProblemSpec {
 public:
  /// Stationary construction passes N stage entries indexed by k (replicated
  /// across t); the general form passes N*(N+1)/2 entries ordered t-major,
  /// i.e. (0,0),(0,1),...,(0,N-1),(1,1),...,(N-1,N-1).
  ProblemSpec(int n, int m, int p, int N, bool stationary_in_t,
              std::vector<StageCoeffs> stages,
              std::vector<TerminalCoeffs> terminals,  // N entries (or 1, replicated)
              std::vector<Matrix> delta);             // N entries, p x p PSD

  int n() const { return n_; }
  int m() const { return m_; }
  int p() const { return p_; }
  int horizon() const { return N_; }
  bool stationary_in_t() const { return stationary_; }

  const StageCoeffs& stage(int t, int k) const;
  const TerminalCoeffs& terminal(int t) const;
  const Matrix& delta(int k) const;

  CompositeCoeffs composites(int t, int k) const;
  Matrix terminal_composite(int t) const;  // G_t + G_bar_t

  /// Largest symmetry defect found in the weight matrices before the
  /// constructor re-symmetrized them.
  double max_weight_asymmetry() const { return max_asymmetry_; }

  static StageCoeffs zero_stage(int n, int m, int p);
  static TerminalCoeffs zero_terminal(int n);

  /// All dynamics offsets and linear cost terms vanish (f, d, q, rho, g == 0).
  bool is_homogeneous() const;

 private:
  int index(int t, int k) const;

  int n_, m_, p_, N_;
  bool stationary_;
  std::vector<StageCoeffs> stages_;       // full (t,k) grid, row-major in t
  std::vector<TerminalCoeffs> terminals_; // N entries
  std::vector<Matrix> delta_;             // N entries
  double max_asymmetry_ = 0.0;
};

/// Parses the JSON problem document (see docs/problem_format.md). Missing
/// coefficient families default to zero. Throws std::invalid_argument on
/// schema violations, dimension mismatches, asymmetric weights, or a
/// non-PSD noise moment.
ProblemSpec load_problem(const std::string& json_text);
ProblemSpec load_problem_file(const std::string& path);

/// Serializes back to the document format; loading the output reproduces the
/// matrices bit for bit.
std::string save_problem(const ProblemSpec& spec);

}  // namespace tilq
