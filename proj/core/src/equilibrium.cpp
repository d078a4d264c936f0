#include "tilq/equilibrium.hpp"

#include <stdexcept>

#include "tilq/simulate.hpp"

namespace tilq {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::state_dependent: return "state_dependent";
  }
  return "?";
}

EquilibriumPolicy build_policy(const BackwardTables& tables) {
  EquilibriumPolicy pol;
  pol.kind = tables.kind();
  pol.t0 = tables.start_stage();
  const int N = tables.horizon();
  for (int k = pol.t0; k < N; ++k) {
    const StageOperators& op = tables.ops(k);
    pol.feedback_part.push_back(tables.phi(k));
    pol.open_gain.push_back(op.open_gain);
    pol.gain.push_back(tables.phi(k) + op.open_gain);
    pol.feedforward.push_back(op.feedforward);
  }
  return pol;
}

Vector stationarity_residual(const EquilibriumPolicy& policy, const BackwardTables& tables,
                             const Vector& X, int k) {
  const StageOperators& op = tables.ops(k);
  return op.stationarity * (policy.K(k) * X + policy.c(k)) + op.stationarity_state * X +
         op.stationarity_offset;
}

namespace {

StageConditions stage_conditions(const BackwardTables& tb, const Tolerances& tol) {
  StageConditions sc;
  bool convexity_ok = true;
  bool ranges_ok = true;
  for (int k = tb.start_stage(); k < tb.horizon(); ++k) {
    const StageOperators& op = tb.ops(k);
    const double me = min_eig_sym(op.convexity);
    sc.convexity_min_eig.push_back(me);
    convexity_ok = convexity_ok && me >= -tol.psd_tol * std::max(1.0, sym_norm(op.convexity));

    const Matrix Odag = pinv(op.stationarity, tol);
    const Matrix resL = op.stationarity * (Odag * op.stationarity_state) - op.stationarity_state;
    const Vector resT =
        op.stationarity * (Odag * op.stationarity_offset) - op.stationarity_offset;
    const double rl = resL.norm();
    const double rt = resT.norm();
    sc.range_residual_state.push_back(rl);
    sc.range_residual_offset.push_back(rt);
    sc.stationarity_sv_ratio.push_back(op.stationarity_sv_ratio);
    ranges_ok = ranges_ok &&
                rl <= tol.range_tol * std::max(1.0, op.stationarity_state.norm()) &&
                rt <= tol.range_tol * std::max(1.0, op.stationarity_offset.norm());
  }
  sc.convexity_ok = convexity_ok;
  sc.ranges_ok = ranges_ok;
  return sc;
}

// Range condition sampled along closed-loop equilibrium trajectories; any
// violation is decisive, a clean sample is evidence only.
std::pair<int, int> sample_range_condition(const ProblemSpec& spec, const BackwardTables& tb,
                                           int t, const Vector& x, const Tolerances& tol,
                                           const ClassifyOptions& opt) {
  const EquilibriumPolicy pol = build_policy(tb);
  const auto trajs =
      simulate_closed_loop(spec, pol, t, x, NoiseVariant::gaussian, opt.mc_trajectories,
                           opt.seed);
  int violations = 0;
  for (const auto& traj : trajs) {
    for (int k = t; k < spec.horizon(); ++k) {
      const StageOperators& op = tb.ops(k);
      const Vector target = op.stationarity_state * traj.states[k - t] + op.stationarity_offset;
      if (!in_range(op.stationarity, target, tol)) {
        ++violations;
        break;
      }
    }
  }
  return {static_cast<int>(trajs.size()), violations};
}

Verdict fixed_pair_verdict(const ProblemSpec& spec, const BackwardTables& tb,
                           const StageConditions& sc, int t, const Vector& x,
                           const Tolerances& tol, const ClassifyOptions& opt,
                           ExistenceReport* report) {
  if (!sc.convexity_ok) return Verdict::no;
  if (sc.ranges_ok) return Verdict::yes;  // the all-pairs identities certify every state
  auto [total, violations] = sample_range_condition(spec, tb, t, x, tol, opt);
  report->sampled_trajectories += total;
  report->sampled_violations += violations;
  return violations > 0 ? Verdict::no : Verdict::state_dependent;
}

}  // namespace

ExistenceReport classify_existence(const ProblemSpec& spec, ExistenceReport::Scope scope, int t,
                                   const std::optional<Vector>& x,
                                   const std::optional<std::vector<Matrix>>& phi,
                                   const Tolerances& tol, const ClassifyOptions& opt) {
  tol.validate();
  if (scope == ExistenceReport::Scope::fixed_pair && !x.has_value()) {
    throw std::invalid_argument("classify_existence: fixed_pair scope needs a state x");
  }
  const int t_solve = scope == ExistenceReport::Scope::all_pairs ? 0 : t;

  ExistenceReport rep;
  rep.scope = scope;
  rep.t = t;
  rep.x = x;

  const BackwardTables open_tb = open_loop_backward(spec, t_solve, tol);
  const BackwardTables fb_tb = feedback_backward(spec, t_solve, tol);
  rep.open = stage_conditions(open_tb, tol);
  rep.feedback = stage_conditions(fb_tb, tol);

  std::optional<BackwardTables> mixed_tb;
  if (phi.has_value()) {
    mixed_tb.emplace(mixed_backward(spec, *phi, t_solve, tol));
    rep.mixed = stage_conditions(*mixed_tb, tol);
  }

  if (scope == ExistenceReport::Scope::all_pairs) {
    auto verdict = [](const StageConditions& sc) {
      return (sc.convexity_ok && sc.ranges_ok) ? Verdict::yes : Verdict::no;
    };
    rep.open_exists = verdict(rep.open);
    rep.feedback_exists = verdict(rep.feedback);
    if (rep.mixed) rep.mixed_exists_for_given_phi = verdict(*rep.mixed);
  } else {
    rep.open_exists = fixed_pair_verdict(spec, open_tb, rep.open, t, *x, tol, opt, &rep);
    rep.feedback_exists = fixed_pair_verdict(spec, fb_tb, rep.feedback, t, *x, tol, opt, &rep);
    if (rep.mixed) {
      rep.mixed_exists_for_given_phi =
          fixed_pair_verdict(spec, *mixed_tb, *rep.mixed, t, *x, tol, opt, &rep);
    }
  }

  const UniquenessReport uq = uniqueness_check(spec, t_solve, tol);
  rep.open_unique = uq.open_unique;
  rep.feedback_unique = uq.feedback_unique;
  rep.H_holds = assumption_H_check(spec, tol).all;
  return rep;
}

UniquenessReport uniqueness_check(const ProblemSpec& spec, int t, const Tolerances& tol) {
  tol.validate();
  UniquenessReport rep;
  const BackwardTables open_tb = open_loop_backward(spec, t, tol);
  const BackwardTables fb_tb = feedback_backward(spec, t, tol);
  bool open_ok = true;
  bool fb_ok = true;
  for (int k = t; k < spec.horizon(); ++k) {
    const StageOperators& oo = open_tb.ops(k);
    const double me = min_eig_sym(oo.convexity);
    rep.open_convexity_min_eig.push_back(me);
    rep.open_stationarity_sv_ratio.push_back(oo.stationarity_sv_ratio);
    open_ok = open_ok && me >= -tol.psd_tol * std::max(1.0, sym_norm(oo.convexity)) &&
              oo.stationarity_sv_ratio > kInvertibilityRtol;

    const StageOperators& fo = fb_tb.ops(k);
    const double fme = min_eig_sym(fo.convexity);
    rep.feedback_convexity_min_eig.push_back(fme);
    fb_ok = fb_ok && fme > tol.psd_tol * std::max(1.0, sym_norm(fo.convexity));
  }
  rep.open_unique = open_ok ? Verdict::yes : Verdict::no;
  rep.feedback_unique = fb_ok ? Verdict::yes : Verdict::no;
  return rep;
}

PositivityReport assumption_H_check(const ProblemSpec& spec, const Tolerances& tol) {
  tol.validate();
  PositivityReport rep;
  rep.state_weights_psd = true;
  rep.mean_state_weights_psd = true;
  rep.terminal_psd = true;
  rep.mean_terminal_psd = true;
  rep.control_weights_pd = true;
  rep.mean_control_weights_pd = true;
  for (int t = 0; t < spec.horizon(); ++t) {
    const TerminalCoeffs& tc = spec.terminal(t);
    rep.terminal_psd = rep.terminal_psd && is_psd(tc.G, tol);
    rep.mean_terminal_psd = rep.mean_terminal_psd && is_psd(tc.G + tc.G_bar, tol);
    for (int k = t; k < spec.horizon(); ++k) {
      const StageCoeffs& s = spec.stage(t, k);
      rep.state_weights_psd = rep.state_weights_psd && is_psd(s.Q, tol);
      rep.mean_state_weights_psd = rep.mean_state_weights_psd && is_psd(s.Q + s.Q_bar, tol);
      rep.control_weights_pd = rep.control_weights_pd && is_pd(s.R, tol);
      rep.mean_control_weights_pd = rep.mean_control_weights_pd && is_pd(s.R + s.R_bar, tol);
    }
  }
  rep.all = rep.state_weights_psd && rep.mean_state_weights_psd && rep.terminal_psd &&
            rep.mean_terminal_psd && rep.control_weights_pd && rep.mean_control_weights_pd;
  return rep;
}

}  // namespace tilq
