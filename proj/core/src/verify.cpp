#include "tilq/verify.hpp"

#include <cmath>
#include <stdexcept>

namespace tilq {

namespace {

// Policy closure over the lattice: pure feedback on the propagated state plus
// the exogenous open-loop part evaluated along the attached equilibrium path.
TreeControl policy_closure(const BackwardTables& tables, const NoiseTree& tree) {
  return [&tables, &tree](int stage, int global_node, const Vector& state) {
    const StageOperators& op = tables.ops(stage);
    const Vector open_part =
        op.open_gain * tree.state(stage - tree.root_stage(), global_node) + op.feedforward;
    return Vector(tables.phi(stage) * state + open_part);
  };
}

TreeControl policy_closure(const EquilibriumPolicy& policy, const NoiseTree& tree) {
  return [&policy, &tree](int stage, int global_node, const Vector& state) {
    const Vector open_part =
        policy.open_gain[stage - policy.t0] * tree.state(stage - tree.root_stage(), global_node) +
        policy.c(stage);
    return Vector(policy.feedback_part[stage - policy.t0] * state + open_part);
  };
}

TreeControl with_root_override(const TreeControl& base, int stage, int root_node,
                               const Vector& replacement) {
  return [=, &base](int s, int g, const Vector& state) {
    if (s == stage && g == root_node) return replacement;
    return base(s, g, state);
  };
}

TreeControl with_root_bump(const TreeControl& base, int stage, int root_node, const Vector& bump) {
  return [=, &base](int s, int g, const Vector& state) {
    Vector u = base(s, g, state);
    if (s == stage && g == root_node) u += bump;
    return u;
  };
}

// Exact least-squares fit of D(l) = a*l + b*l^2 over the scale grid.
void fit_quadratic(const std::vector<double>& scales, const std::vector<double>& D, double* a,
                   double* b, double* worst_gap) {
  Eigen::MatrixXd A(scales.size(), 2);
  Eigen::VectorXd rhs(scales.size());
  for (size_t i = 0; i < scales.size(); ++i) {
    A(i, 0) = scales[i];
    A(i, 1) = scales[i] * scales[i];
    rhs(i) = D[i];
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(rhs);
  *a = coef(0);
  *b = coef(1);
  *worst_gap = (A * coef - rhs).cwiseAbs().maxCoeff();
}

PerturbationProbe probe_impl(const ProblemSpec& spec, const BackwardTables& tables, int t,
                             const Vector& x, int k, const std::vector<Vector>& directions,
                             std::vector<double> scales) {
  if (scales.empty()) scales = {-1.0, -0.5, 0.5, 1.0};
  NoiseTree tree(spec, t, x);
  tree.attach_policy_states(spec, build_policy(tables));
  const TreeControl base = policy_closure(tables, tree);

  const int dk = k - t;
  const int nodes = 1 << dk;
  if (static_cast<int>(directions.size()) != nodes) {
    throw std::invalid_argument("perturbation probe: one direction per depth-k node required");
  }

  PerturbationProbe probe;
  probe.stage = k;
  probe.scales = scales;
  const StageOperators& op = tables.ops(k);
  for (int j = 0; j < nodes; ++j) {
    const double baseline = tree_cost(spec, tree, k, j, base);
    std::vector<double> D;
    D.reserve(scales.size());
    for (double lam : scales) {
      const TreeControl pert = with_root_bump(base, k, j, Vector(lam * directions[j]));
      D.push_back(tree_cost(spec, tree, k, j, pert) - baseline);
    }
    double a = 0, b = 0, gap = 0;
    fit_quadratic(scales, D, &a, &b, &gap);

    const Vector Xk = tree.state(dk, j);
    const Vector r = op.stationarity * (tables.phi(k) * Xk + op.open_gain * Xk + op.feedforward) +
                     op.stationarity_state * Xk + op.stationarity_offset;
    const double a_pred = 2.0 * r.dot(directions[j]);
    const double b_pred = directions[j].dot(op.convexity * directions[j]);

    probe.differences.push_back(std::move(D));
    probe.fitted_linear.push_back(a);
    probe.fitted_quadratic.push_back(b);
    probe.fit_residual.push_back(gap);
    probe.predicted_linear.push_back(a_pred);
    probe.predicted_quadratic.push_back(b_pred);
    probe.max_linear_dev = std::max(probe.max_linear_dev, std::abs(a - a_pred));
    probe.max_quadratic_dev = std::max(probe.max_quadratic_dev, std::abs(b - b_pred));
    probe.max_fit_residual = std::max(probe.max_fit_residual, gap);
  }
  return probe;
}

}  // namespace

PerturbationProbe check_cost_difference(const ProblemSpec& spec, const BackwardTables& tables,
                                        int t, const Vector& x, int k, const Vector& direction,
                                        const std::vector<double>& scales) {
  const int nodes = 1 << (k - t);
  return probe_impl(spec, tables, t, x, k, std::vector<Vector>(nodes, direction), scales);
}

PerturbationProbe check_cost_difference(const ProblemSpec& spec, const BackwardTables& tables,
                                        int t, const Vector& x, int k,
                                        const std::vector<Vector>& directions,
                                        const std::vector<double>& scales) {
  return probe_impl(spec, tables, t, x, k, directions, scales);
}

double check_jtilde_identity(const ProblemSpec& spec, const std::vector<Matrix>& phi, int k,
                             const Vector& direction, const Tolerances& tol) {
  const int N = spec.horizon();
  if (static_cast<int>(phi.size()) != N - k) {
    throw std::invalid_argument("jtilde: need the feedback-part tail for stages k..N-1");
  }
  NoiseTree tree(spec, k, Vector::Zero(spec.n()));  // draws only; states unused

  // Pure perturbation state: zero start, kicked through the composite input
  // channels at stage k, then driven by the closed-loop homogeneous dynamics
  // with conditional means realized as exact level averages.
  std::vector<Vector> alpha{Vector::Zero(spec.n())};
  double cost = direction.dot(spec.composites(k, k).R * direction);

  for (int l = k; l < N; ++l) {
    const int rel = l - k;
    const int count = 1 << rel;
    const double prob = 1.0 / count;
    Vector abar = Vector::Zero(spec.n());
    for (const auto& a : alpha) abar += prob * a;

    if (l > k) {
      const StageCoeffs& sd = spec.stage(k, l);
      const Matrix& Ph = phi[l - k];
      const Matrix Mq = sd.Q + Ph.transpose() * sd.R * Ph;
      const Matrix Mqbar = sd.Q_bar + Ph.transpose() * sd.R_bar * Ph;
      double quad = 0.0;
      for (const auto& a : alpha) quad += prob * a.dot(Mq * a);
      cost += quad + abar.dot(Mqbar * abar);
    }

    std::vector<Vector> next(static_cast<size_t>(2) * count);
    if (l == k) {
      const CompositeCoeffs ca = spec.composites(k, k);
      const Vector det = ca.B * direction;
      const Vector nc = ca.D[0] * direction;
      for (int b = 0; b < 2; ++b) next[b] = det + nc * tree.draw(1, b);
    } else {
      const StageCoeffs& sd = spec.stage(k, l);
      const Matrix& Ph = phi[l - k];
      const Matrix Acl = sd.A + sd.B * Ph;
      const Matrix AbarCl = sd.A_bar + sd.B_bar * Ph;
      const Matrix Ccl = sd.C[0] + sd.D[0] * Ph;
      const Matrix CbarCl = sd.C_bar[0] + sd.D_bar[0] * Ph;
      for (int s = 0; s < count; ++s) {
        const Vector det = Acl * alpha[s] + AbarCl * abar;
        const Vector nc = Ccl * alpha[s] + CbarCl * abar;
        for (int b = 0; b < 2; ++b) {
          const int child = (s << 1) | b;
          next[2 * s + b] = det + nc * tree.draw(rel + 1, child);
        }
      }
    }
    alpha = std::move(next);
  }

  const int count = 1 << (N - k);
  const double prob = 1.0 / count;
  const TerminalCoeffs& tc = spec.terminal(k);
  Vector abar = Vector::Zero(spec.n());
  double term = 0.0;
  for (const auto& a : alpha) {
    term += prob * a.dot(tc.G * a);
    abar += prob * a;
  }
  cost += term + abar.dot(tc.G_bar * abar);

  const BackwardTables tb = mixed_backward(spec, phi, k, tol);
  const double quad_form = direction.dot(tb.ops(k).convexity * direction);
  return std::abs(cost - quad_form);
}

InequalityCheck check_definition_inequality(const ProblemSpec& spec,
                                            const EquilibriumPolicy& policy, int t,
                                            const Vector& x, int k, int grid_points,
                                            double grid_lo, double grid_hi, double slack) {
  if (grid_points < 2) throw std::invalid_argument("inequality check: need at least 2 grid points");
  NoiseTree tree(spec, t, x);
  tree.attach_policy_states(spec, policy);
  const TreeControl base = policy_closure(policy, tree);

  const int m = spec.m();
  std::vector<double> axis(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    axis[i] = grid_lo + (grid_hi - grid_lo) * i / (grid_points - 1);
  }
  long candidates = 1;
  for (int i = 0; i < m; ++i) candidates *= grid_points;

  InequalityCheck result;
  result.nodes_checked = 1 << (k - t);
  result.candidates_per_node = static_cast<int>(candidates);
  result.worst_margin = std::numeric_limits<double>::infinity();

  for (int j = 0; j < result.nodes_checked; ++j) {
    const double baseline = tree_cost(spec, tree, k, j, base);
    for (long idx = 0; idx < candidates; ++idx) {
      Vector u(m);
      long rem = idx;
      for (int i = 0; i < m; ++i) {
        u(i) = axis[rem % grid_points];
        rem /= grid_points;
      }
      const TreeControl pert = with_root_override(base, k, j, u);
      const double margin = tree_cost(spec, tree, k, j, pert) - baseline;
      result.worst_margin = std::min(result.worst_margin, margin);
      if (margin < -slack) ++result.violations;
    }
  }
  result.pass = result.violations == 0;
  return result;
}

ReductionReport cross_check_reductions(const ProblemSpec& spec, int t, const Tolerances& tol) {
  const int N = spec.horizon();
  const BackwardTables open_tb = open_loop_backward(spec, t, tol);
  const std::vector<Matrix> zero_phi(N - t, Matrix::Zero(spec.m(), spec.n()));
  const BackwardTables mixed0 = mixed_backward(spec, zero_phi, t, tol);
  const BackwardTables fb = feedback_backward(spec, t, tol);
  std::vector<Matrix> fb_phi;
  for (int k = t; k < N; ++k) fb_phi.push_back(fb.phi(k));
  const BackwardTables mixedfb = mixed_backward(spec, fb_phi, t, tol);

  ReductionReport rep;
  for (int k = t; k < N; ++k) {
    for (int l = k; l <= N; ++l) {
      double dev = (mixed0.state_cost(k, l) - open_tb.state_cost(k, l)).norm();
      dev = std::max(dev, (mixed0.mean_cost(k, l) - open_tb.mean_cost(k, l)).norm());
      dev = std::max(dev, (mixed0.path_coupling(k, l) - open_tb.path_coupling(k, l)).norm());
      dev = std::max(dev,
                     (mixed0.mean_path_coupling(k, l) - open_tb.mean_path_coupling(k, l)).norm());
      dev = std::max(dev,
                     (mixed0.initial_coupling(k, l) - open_tb.initial_coupling(k, l)).norm());
      dev = std::max(dev, (mixed0.offset(k, l) - open_tb.offset(k, l)).norm());
      rep.zero_phi_max_dev = std::max(rep.zero_phi_max_dev, dev);
    }
    const StageOperators& a = mixed0.ops(k);
    const StageOperators& b = open_tb.ops(k);
    double dev = (a.convexity - b.convexity).norm();
    dev = std::max(dev, (a.stationarity - b.stationarity).norm());
    dev = std::max(dev, (a.stationarity_state - b.stationarity_state).norm());
    dev = std::max(dev, (a.stationarity_offset - b.stationarity_offset).norm());
    dev = std::max(dev, (a.gain - b.gain).norm());
    dev = std::max(dev, (a.feedforward - b.feedforward).norm());
    rep.zero_phi_max_dev = std::max(rep.zero_phi_max_dev, dev);

    const StageOperators& mf = mixedfb.ops(k);
    const StageOperators& ff = fb.ops(k);
    for (int l = k; l <= N; ++l) {
      rep.self_consistent_max_path =
          std::max({rep.self_consistent_max_path, mixedfb.path_coupling(k, l).norm(),
                    mixedfb.mean_path_coupling(k, l).norm()});
    }
    rep.self_consistent_max_gain = std::max(rep.self_consistent_max_gain, mf.open_gain.norm());
    double ops_dev = (mf.stationarity - ff.convexity).norm();
    ops_dev = std::max(ops_dev, (mf.stationarity_state - ff.stationarity_state).norm());
    ops_dev = std::max(ops_dev, (mf.convexity - ff.convexity).norm());
    rep.self_consistent_max_ops_dev = std::max(rep.self_consistent_max_ops_dev, ops_dev);
  }
  return rep;
}

}  // namespace tilq
