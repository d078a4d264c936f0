#include "tilq/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace tilq {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : state_(mix64(master_seed) ^ mix64(stream_id * kGamma + 1)) {}

std::uint64_t RngStream::next_raw() {
  state_ += kGamma;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double RngStream::uniform01() {
  return (static_cast<double>(next_raw() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

int RngStream::bit() { return static_cast<int>(next_raw() >> 63); }

namespace {

// Symmetric PSD square root, tiny negative eigenvalues clamped to zero.
Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_policy_covers(const EquilibriumPolicy& policy, int t, int N) {
  if (policy.t0 > t || policy.t0 + policy.stages() < N) {
    throw std::invalid_argument("policy does not cover stages t..N-1");
  }
}

}  // namespace

std::vector<Trajectory> simulate_closed_loop(const ProblemSpec& spec,
                                             const EquilibriumPolicy& policy, int t,
                                             const Vector& x, NoiseVariant noise, int reps,
                                             std::uint64_t seed) {
  const int N = spec.horizon();
  if (t < 0 || t >= N) throw std::invalid_argument("simulate: start stage out of range");
  if (x.size() != spec.n()) throw std::invalid_argument("simulate: state dimension mismatch");
  check_policy_covers(policy, t, N);
  if (noise == NoiseVariant::two_point && spec.p() != 1) {
    throw std::invalid_argument("two_point noise requires a single noise channel");
  }

  std::vector<Matrix> noise_factor;  // per stage, for gaussian draws
  if (noise == NoiseVariant::gaussian) {
    noise_factor.reserve(N - t);
    for (int k = t; k < N; ++k) noise_factor.push_back(psd_sqrt(spec.delta(k)));
  }

  std::vector<Trajectory> out;
  out.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    RngStream rng(seed, static_cast<std::uint64_t>(rep));
    Trajectory traj;
    traj.t0 = t;
    traj.seed = seed;
    traj.rep = rep;
    Vector X = x;
    traj.states.push_back(X);
    for (int k = t; k < N; ++k) {
      const Vector u = policy.K(k) * X + policy.c(k);
      Vector w(spec.p());
      if (noise == NoiseVariant::gaussian) {
        Vector z(spec.p());
        for (int i = 0; i < spec.p(); ++i) z(i) = rng.normal();
        w = noise_factor[k - t] * z;
      } else {
        const double s = std::sqrt(std::max(0.0, spec.delta(k)(0, 0)));
        w(0) = rng.bit() ? s : -s;
      }
      const CompositeCoeffs ca = spec.composites(k, k);
      const StageCoeffs& da = spec.stage(k, k);
      Vector next = ca.A * X + ca.B * u + da.f;
      for (int i = 0; i < spec.p(); ++i) {
        next += (ca.C[i] * X + ca.D[i] * u + da.d[i]) * w(i);
      }
      traj.controls.push_back(u);
      traj.noises.push_back(w);
      X = next;
      traj.states.push_back(X);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

MomentRun moment_propagation(const ProblemSpec& spec, const EquilibriumPolicy& policy, int t,
                             const Vector& x) {
  const int N = spec.horizon();
  if (t < 0 || t >= N) throw std::invalid_argument("moments: start stage out of range");
  if (x.size() != spec.n()) throw std::invalid_argument("moments: state dimension mismatch");
  check_policy_covers(policy, t, N);

  MomentRun run;
  run.t0 = t;
  Vector mu = x;
  Matrix M = x * x.transpose();
  run.mean.push_back(mu);
  run.second_moment.push_back(M);
  double cost = 0.0;

  for (int l = t; l < N; ++l) {
    const StageCoeffs& sd = spec.stage(t, l);
    const Matrix& K = policy.K(l);
    const Vector& c = policy.c(l);
    const Vector u_mean = K * mu + c;

    cost += (sd.Q * M).trace() + mu.dot(sd.Q_bar * mu);
    cost += (K.transpose() * sd.R * K * M).trace() + 2.0 * c.dot(sd.R * (K * mu)) +
            c.dot(sd.R * c);
    cost += u_mean.dot(sd.R_bar * u_mean);
    cost += 2.0 * sd.q.dot(mu) + 2.0 * sd.rho.dot(u_mean);

    // closed-loop transition split into realized and mean channels
    const Matrix Fcl = sd.A + sd.B * K;
    const Vector h = (sd.A_bar + sd.B_bar * K) * mu + (sd.B + sd.B_bar) * c + sd.f;
    const Matrix& dl = spec.delta(l);
    std::vector<Matrix> Gc(spec.p());
    std::vector<Vector> e(spec.p());
    for (int i = 0; i < spec.p(); ++i) {
      Gc[i] = sd.C[i] + sd.D[i] * K;
      e[i] = (sd.C_bar[i] + sd.D_bar[i] * K) * mu + (sd.D[i] + sd.D_bar[i]) * c + sd.d[i];
    }
    Matrix M_next = Fcl * M * Fcl.transpose() + Fcl * mu * h.transpose() +
                    h * mu.transpose() * Fcl.transpose() + h * h.transpose();
    for (int i = 0; i < spec.p(); ++i) {
      for (int j = 0; j < spec.p(); ++j) {
        const double dij = dl(i, j);
        if (dij == 0.0) continue;
        M_next += dij * (Gc[i] * M * Gc[j].transpose() + Gc[i] * mu * e[j].transpose() +
                         e[i] * mu.transpose() * Gc[j].transpose() + e[i] * e[j].transpose());
      }
    }
    mu = Fcl * mu + h;
    M = symmetrize(M_next);
    run.mean.push_back(mu);
    run.second_moment.push_back(M);
  }

  const TerminalCoeffs& tc = spec.terminal(t);
  cost += (tc.G * M).trace() + mu.dot(tc.G_bar * mu) + 2.0 * (tc.F * x + tc.g).dot(mu);
  run.cost = cost;
  return run;
}

// ---------------------------------------------------------------------------
// Exhaustive two-branch lattice

NoiseTree::NoiseTree(const ProblemSpec& spec, int t0, Vector x)
    : spec_(&spec), t0_(t0), depth_(spec.horizon() - t0), root_(std::move(x)) {
  if (spec.p() != 1) throw std::invalid_argument("noise lattice requires a single channel");
  if (t0 < 0 || t0 >= spec.horizon()) {
    throw std::invalid_argument("noise lattice: start stage out of range");
  }
  if (depth_ > 12) throw std::invalid_argument("noise lattice: depth exceeds 12");
  if (root_.size() != spec.n()) {
    throw std::invalid_argument("noise lattice: state dimension mismatch");
  }
  draws_.resize(depth_ + 1);
  for (int d = 1; d <= depth_; ++d) {
    const double s = std::sqrt(std::max(0.0, spec.delta(t0 + d - 1)(0, 0)));
    draws_[d].resize(static_cast<size_t>(1) << d);
    for (size_t j = 0; j < draws_[d].size(); ++j) {
      draws_[d][j] = (j & 1) == 0 ? s : -s;
    }
  }
}

double NoiseTree::node_prob(int d) const { return std::ldexp(1.0, -d); }

double NoiseTree::draw(int d, int j) const {
  if (d < 1 || d > depth_ || j < 0 || j >= level_size(d)) {
    throw std::out_of_range("noise lattice draw index");
  }
  return draws_[d][j];
}

const Vector& NoiseTree::state(int d, int j) const {
  if (states_.empty()) throw std::logic_error("noise lattice: states not attached");
  if (d < 0 || d > depth_ || j < 0 || j >= level_size(d)) {
    throw std::out_of_range("noise lattice state index");
  }
  return states_[d][j];
}

void NoiseTree::attach_policy_states(const ProblemSpec& spec, const EquilibriumPolicy& policy) {
  check_policy_covers(policy, t0_, spec.horizon());
  states_.assign(depth_ + 1, {});
  states_[0] = {root_};
  for (int d = 0; d < depth_; ++d) {
    const int k = t0_ + d;
    const CompositeCoeffs ca = spec.composites(k, k);
    const StageCoeffs& da = spec.stage(k, k);
    states_[d + 1].resize(static_cast<size_t>(1) << (d + 1));
    for (int j = 0; j < level_size(d); ++j) {
      const Vector& X = states_[d][j];
      const Vector u = policy.K(k) * X + policy.c(k);
      const Vector det = ca.A * X + ca.B * u + da.f;
      const Vector nc = ca.C[0] * X + ca.D[0] * u + da.d[0];
      for (int b = 0; b < 2; ++b) {
        const int cj = (j << 1) | b;
        states_[d + 1][cj] = det + nc * draws_[d + 1][cj];
      }
    }
  }
}

double tree_cost(const ProblemSpec& spec, const NoiseTree& tree, int k, int node,
                 const TreeControl& control) {
  const int t0 = tree.root_stage();
  const int N = spec.horizon();
  if (k < t0 || k >= N) throw std::invalid_argument("tree_cost: stage out of range");
  const int dk = k - t0;
  if (node < 0 || node >= tree.level_size(dk)) {
    throw std::out_of_range("tree_cost: node out of range");
  }

  std::vector<Vector> states{tree.state(dk, node)};
  const Vector x_root = states[0];
  double cost = 0.0;

  for (int l = k; l < N; ++l) {
    const int rel = l - k;
    const int count = 1 << rel;
    const double prob = 1.0 / count;
    const int base = node << rel;  // first global node index at this level

    std::vector<Vector> controls(count);
    Vector xbar = Vector::Zero(spec.n());
    Vector ubar = Vector::Zero(spec.m());
    for (int s = 0; s < count; ++s) {
      controls[s] = control(l, base + s, states[s]);
      xbar += prob * states[s];
      ubar += prob * controls[s];
    }

    const StageCoeffs& sd = spec.stage(k, l);
    double quad = 0.0;
    for (int s = 0; s < count; ++s) {
      quad += prob * (states[s].dot(sd.Q * states[s]) + controls[s].dot(sd.R * controls[s]));
    }
    cost += quad + xbar.dot(sd.Q_bar * xbar) + ubar.dot(sd.R_bar * ubar) +
            2.0 * sd.q.dot(xbar) + 2.0 * sd.rho.dot(ubar);

    std::vector<Vector> next(static_cast<size_t>(2) * count);
    const int dl = l - t0;
    for (int s = 0; s < count; ++s) {
      const Vector det = sd.A * states[s] + sd.A_bar * xbar + sd.B * controls[s] +
                         sd.B_bar * ubar + sd.f;
      const Vector nc = sd.C[0] * states[s] + sd.C_bar[0] * xbar + sd.D[0] * controls[s] +
                        sd.D_bar[0] * ubar + sd.d[0];
      for (int b = 0; b < 2; ++b) {
        const int child = ((base + s) << 1) | b;
        next[2 * s + b] = det + nc * tree.draw(dl + 1, child);
      }
    }
    states = std::move(next);
  }

  const int count = 1 << (N - k);
  const double prob = 1.0 / count;
  Vector xbar = Vector::Zero(spec.n());
  double terminal_quad = 0.0;
  const TerminalCoeffs& tc = spec.terminal(k);
  for (int s = 0; s < count; ++s) {
    terminal_quad += prob * states[s].dot(tc.G * states[s]);
    xbar += prob * states[s];
  }
  cost += terminal_quad + xbar.dot(tc.G_bar * xbar) + 2.0 * (tc.F * x_root + tc.g).dot(xbar);
  return cost;
}

// ---------------------------------------------------------------------------
// CSV export

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header(std::ofstream& out, const ProblemSpec& spec, bool with_rep) {
  if (with_rep) out << "rep,";
  out << "stage";
  for (int i = 1; i <= spec.n(); ++i) out << ",x" << i;
  for (int i = 1; i <= spec.m(); ++i) out << ",u" << i;
  for (int i = 1; i <= spec.p(); ++i) out << ",w" << i;
  out << "\n";
}

void write_rows(std::ofstream& out, const ProblemSpec& spec, const Trajectory& traj,
                bool with_rep) {
  const int steps = static_cast<int>(traj.controls.size());
  for (int s = 0; s <= steps; ++s) {
    if (with_rep) out << traj.rep << ",";
    out << (traj.t0 + s);
    for (int i = 0; i < spec.n(); ++i) out << "," << fmt_double(traj.states[s](i));
    const bool has_u = s < steps;
    for (int i = 0; i < spec.m(); ++i) {
      out << ",";
      if (has_u) out << fmt_double(traj.controls[s](i));
    }
    for (int i = 0; i < spec.p(); ++i) {
      out << ",";
      if (has_u) out << fmt_double(traj.noises[s](i));
    }
    out << "\n";
  }
}

}  // namespace

void write_trajectory_csv(const std::string& path, const ProblemSpec& spec,
                          const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_header(out, spec, false);
  write_rows(out, spec, traj, false);
}

void write_trajectories_long_csv(const std::string& path, const ProblemSpec& spec,
                                 const std::vector<Trajectory>& trajs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_header(out, spec, true);
  for (const auto& traj : trajs) write_rows(out, spec, traj, true);
}

}  // namespace tilq
