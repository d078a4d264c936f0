#include "tilq/recursions.hpp"

#include <stdexcept>

namespace tilq {

BackwardTables::BackwardTables(SolverKind kind, int t0, int N, int n, int m)
    : kind_(kind), t0_(t0), N_(N) {
  if (t0 < 0 || t0 >= N) throw std::invalid_argument("start stage outside horizon");
  const int rows = N - t0;
  auto grid_of = [&](int r, int c) {
    std::vector<std::vector<Matrix>> g(rows);
    for (int k = t0; k < N; ++k) g[k - t0].assign(N - k + 1, Matrix::Zero(r, c));
    return g;
  };
  state_cost_ = grid_of(n, n);
  mean_cost_ = grid_of(n, n);
  path_coupling_ = grid_of(n, n);
  mean_path_coupling_ = grid_of(n, n);
  initial_coupling_ = grid_of(n, n);
  offset_.resize(rows);
  for (int k = t0; k < N; ++k) offset_[k - t0].assign(N - k + 1, Vector::Zero(n));
  ops_.resize(rows);
  phi_.assign(rows, Matrix::Zero(m, n));
}

const StageOperators& BackwardTables::ops(int k) const {
  if (k < t0_ || k >= N_) throw std::out_of_range("operator stage out of range");
  return ops_[k - t0_];
}

StageOperators& BackwardTables::ops(int k) {
  if (k < t0_ || k >= N_) throw std::out_of_range("operator stage out of range");
  return ops_[k - t0_];
}

const Matrix& BackwardTables::phi(int k) const {
  if (k < t0_ || k >= N_) throw std::out_of_range("phi stage out of range");
  return phi_[k - t0_];
}

void BackwardTables::set_phi(int k, Matrix value) {
  if (k < t0_ || k >= N_) throw std::out_of_range("phi stage out of range");
  phi_[k - t0_] = std::move(value);
}

namespace {

// Weighted channel sum  sum_ij delta(i,j) * Li^T * W * Rj  over noise channels.
Matrix channel_quad(const Matrix& delta, const std::vector<Matrix>& L, const Matrix& W,
                    const std::vector<Matrix>& R) {
  const int p = static_cast<int>(L.size());
  Matrix acc = Matrix::Zero(L[0].cols(), R[0].cols());
  for (int i = 0; i < p; ++i) {
    const Matrix LiW = L[i].transpose() * W;
    for (int j = 0; j < p; ++j) {
      const double dij = delta(i, j);
      if (dij != 0.0) acc.noalias() += dij * (LiW * R[j]);
    }
  }
  return acc;
}

Vector channel_quad_vec(const Matrix& delta, const std::vector<Matrix>& L, const Matrix& W,
                        const std::vector<Vector>& r) {
  const int p = static_cast<int>(L.size());
  Vector acc = Vector::Zero(L[0].cols());
  for (int i = 0; i < p; ++i) {
    const Matrix LiW = L[i].transpose() * W;
    for (int j = 0; j < p; ++j) {
      const double dij = delta(i, j);
      if (dij != 0.0) acc.noalias() += dij * (LiW * r[j]);
    }
  }
  return acc;
}

std::vector<Matrix> closed_loop(const std::vector<Matrix>& C, const std::vector<Matrix>& D,
                                const Matrix& gain) {
  std::vector<Matrix> out;
  out.reserve(C.size());
  for (size_t i = 0; i < C.size(); ++i) out.push_back(C[i] + D[i] * gain);
  return out;
}

void finalize_stage_ops(StageOperators& op, const Tolerances& tol) {
  op.convexity = symmetrize(op.convexity);
  op.stationarity_asymmetry = (op.stationarity - op.stationarity.transpose()).norm();
  op.stationarity_sv_ratio = sv_ratio(op.stationarity);
  const Matrix Odag = pinv(op.stationarity, tol);
  op.gain = -(Odag * op.stationarity_state);
  op.feedforward = -(Odag * op.stationarity_offset);
}

}  // namespace

BackwardTables mixed_backward(const ProblemSpec& spec, const std::vector<Matrix>& phi, int t0,
                              const Tolerances& tol) {
  tol.validate();
  const int N = spec.horizon();
  const int n = spec.n();
  const int m = spec.m();
  if (t0 < 0 || t0 >= N) throw std::invalid_argument("mixed_backward: start stage out of range");
  if (static_cast<int>(phi.size()) != N - t0) {
    throw std::invalid_argument("mixed_backward: need one feedback part per stage t0..N-1");
  }
  for (const Matrix& P : phi) {
    if (P.rows() != m || P.cols() != n) {
      throw std::invalid_argument("mixed_backward: feedback part has wrong shape");
    }
    require_finite(P, "mixed_backward phi");
  }

  BackwardTables tb(SolverKind::mixed, t0, N, n, m);
  for (int k = t0; k < N; ++k) tb.set_phi(k, phi[k - t0]);

  for (int k = N - 1; k >= t0; --k) {
    const TerminalCoeffs& term = spec.terminal(k);
    tb.state_cost(k, N) = term.G;
    tb.mean_cost(k, N) = term.G + term.G_bar;
    tb.path_coupling(k, N).setZero();
    tb.mean_path_coupling(k, N).setZero();
    tb.initial_coupling(k, N) = term.F;
    tb.offset(k, N) = term.g;

    // Inner pass l = N-1 .. k+1 only touches gains and operators of stages
    // >= k+1, all fixed by earlier outer iterations.
    auto step = [&](int l) {
      const StageCoeffs& sd = spec.stage(k, l);
      const CompositeCoeffs cs = spec.composites(k, l);
      const StageCoeffs& dd = spec.stage(l, l);
      const CompositeCoeffs cd = spec.composites(l, l);
      const Matrix& dl = spec.delta(l);
      const Matrix& Ph = tb.phi(l);
      const Matrix gain_l = Ph + tb.ops(l).open_gain;  // total closed-loop gain at stage l
      const Vector& vbar_l = tb.ops(l).feedforward;

      const Matrix Acl = sd.A + sd.B * Ph;
      const Matrix AclC = cs.A + cs.B * Ph;
      const std::vector<Matrix> Ccl = closed_loop(sd.C, sd.D, Ph);
      const std::vector<Matrix> CclC = closed_loop(cs.C, cs.D, Ph);
      const Matrix closedA = cd.A + cd.B * gain_l;
      const std::vector<Matrix> closedC = closed_loop(cd.C, cd.D, gain_l);

      const Matrix& S1 = tb.state_cost(k, l + 1);
      const Matrix& Sc1 = tb.mean_cost(k, l + 1);
      const Matrix& T1 = tb.path_coupling(k, l + 1);
      const Matrix& Tc1 = tb.mean_path_coupling(k, l + 1);

      tb.state_cost(k, l) = symmetrize(sd.Q + Ph.transpose() * sd.R * Ph +
                                       Acl.transpose() * S1 * Acl +
                                       channel_quad(dl, Ccl, S1, Ccl));
      tb.mean_cost(k, l) = symmetrize(cs.Q + Ph.transpose() * cs.R * Ph +
                                      AclC.transpose() * Sc1 * AclC +
                                      channel_quad(dl, CclC, S1, CclC));

      const Matrix brace = Ph.transpose() * sd.R + Acl.transpose() * S1 * sd.B +
                           channel_quad(dl, Ccl, S1, sd.D);
      const Matrix braceC = Ph.transpose() * cs.R + AclC.transpose() * Sc1 * cs.B +
                            channel_quad(dl, CclC, S1, cs.D);
      const Matrix& Gam = tb.ops(l).open_gain;
      tb.path_coupling(k, l) = brace * Gam + Acl.transpose() * T1 * closedA +
                               channel_quad(dl, Ccl, T1, closedC);
      tb.mean_path_coupling(k, l) = braceC * Gam + AclC.transpose() * Tc1 * closedA +
                                    channel_quad(dl, CclC, T1, closedC);

      tb.initial_coupling(k, l) = AclC.transpose() * tb.initial_coupling(k, l + 1);

      const Matrix beta = Ph.transpose() * cs.R +
                          AclC.transpose() * (Sc1 * cs.B + Tc1 * cd.B) +
                          channel_quad(dl, CclC, S1, cs.D) + channel_quad(dl, CclC, T1, cd.D);
      tb.offset(k, l) = beta * vbar_l +
                        AclC.transpose() * (Sc1 * sd.f + tb.offset(k, l + 1)) +
                        AclC.transpose() * (Tc1 * dd.f) + channel_quad_vec(dl, CclC, S1, sd.d) +
                        channel_quad_vec(dl, CclC, T1, dd.d) + Ph.transpose() * sd.rho + sd.q;
    };
    for (int l = N - 1; l >= k + 1; --l) step(l);

    // stage-k operators from the (k, k+1) tables
    const StageCoeffs& da = spec.stage(k, k);
    const CompositeCoeffs ca = spec.composites(k, k);
    const Matrix& dk = spec.delta(k);
    const Matrix& S1 = tb.state_cost(k, k + 1);
    const Matrix& Sc1 = tb.mean_cost(k, k + 1);
    const Matrix ST = S1 + tb.path_coupling(k, k + 1);
    const Matrix ScT = Sc1 + tb.mean_path_coupling(k, k + 1);

    StageOperators& op = tb.ops(k);
    op.convexity = ca.R + ca.B.transpose() * Sc1 * ca.B + channel_quad(dk, ca.D, S1, ca.D);
    op.stationarity = ca.R + ca.B.transpose() * ScT * ca.B + channel_quad(dk, ca.D, ST, ca.D);
    op.stationarity_state = ca.B.transpose() * ScT * ca.A + channel_quad(dk, ca.D, ST, ca.C) +
                            ca.B.transpose() * tb.initial_coupling(k, k + 1);
    op.stationarity_offset = ca.B.transpose() * (ScT * da.f) +
                             channel_quad_vec(dk, ca.D, ST, da.d) +
                             ca.B.transpose() * tb.offset(k, k + 1) + da.rho;
    finalize_stage_ops(op, tol);
    op.convexity_exchanged = op.convexity;
    op.open_gain = op.gain - tb.phi(k);

    if (!op.gain.allFinite() || !op.feedforward.allFinite()) {
      throw std::runtime_error("mixed_backward: non-finite stage operators (blow-up)");
    }

    step(k);  // l = k entry, now that the stage-k gain exists
  }
  return tb;
}

BackwardTables open_loop_backward(const ProblemSpec& spec, int t0, const Tolerances& tol) {
  tol.validate();
  const int N = spec.horizon();
  const int n = spec.n();
  const int m = spec.m();
  if (t0 < 0 || t0 >= N) {
    throw std::invalid_argument("open_loop_backward: start stage out of range");
  }

  BackwardTables tb(SolverKind::open_loop, t0, N, n, m);

  for (int k = N - 1; k >= t0; --k) {
    const TerminalCoeffs& term = spec.terminal(k);
    tb.state_cost(k, N) = term.G;
    tb.mean_cost(k, N) = term.G + term.G_bar;
    tb.path_coupling(k, N).setZero();
    tb.mean_path_coupling(k, N).setZero();
    tb.initial_coupling(k, N) = term.F;
    tb.offset(k, N) = term.g;

    auto step = [&](int l) {
      const StageCoeffs& sd = spec.stage(k, l);
      const CompositeCoeffs cs = spec.composites(k, l);
      const StageCoeffs& dd = spec.stage(l, l);
      const CompositeCoeffs cd = spec.composites(l, l);
      const Matrix& dl = spec.delta(l);
      const Matrix H = -tb.ops(l).gain;  // pinv(stationarity) * stationarity_state at stage l
      const Vector& vbar_l = tb.ops(l).feedforward;

      const Matrix& S1 = tb.state_cost(k, l + 1);
      const Matrix& Sc1 = tb.mean_cost(k, l + 1);
      const Matrix& T1 = tb.path_coupling(k, l + 1);
      const Matrix& Tc1 = tb.mean_path_coupling(k, l + 1);

      tb.state_cost(k, l) =
          symmetrize(sd.Q + sd.A.transpose() * S1 * sd.A + channel_quad(dl, sd.C, S1, sd.C));
      tb.mean_cost(k, l) =
          symmetrize(cs.Q + cs.A.transpose() * Sc1 * cs.A + channel_quad(dl, cs.C, S1, cs.C));

      const Matrix brace = sd.A.transpose() * S1 * sd.B + channel_quad(dl, sd.C, S1, sd.D) +
                           sd.A.transpose() * T1 * cd.B + channel_quad(dl, sd.C, T1, cd.D);
      const Matrix braceC = cs.A.transpose() * Sc1 * cs.B + channel_quad(dl, cs.C, S1, cs.D) +
                            cs.A.transpose() * Tc1 * cd.B + channel_quad(dl, cs.C, T1, cd.D);
      tb.path_coupling(k, l) = sd.A.transpose() * T1 * cd.A +
                               channel_quad(dl, sd.C, T1, cd.C) - brace * H;
      tb.mean_path_coupling(k, l) = cs.A.transpose() * Tc1 * cd.A +
                                    channel_quad(dl, cs.C, T1, cd.C) - braceC * H;

      tb.initial_coupling(k, l) = cs.A.transpose() * tb.initial_coupling(k, l + 1);

      const Matrix beta = cs.A.transpose() * (Sc1 * cs.B + Tc1 * cd.B) +
                          channel_quad(dl, cs.C, S1, cs.D) + channel_quad(dl, cs.C, T1, cd.D);
      tb.offset(k, l) = beta * vbar_l + cs.A.transpose() * (Sc1 * sd.f + tb.offset(k, l + 1)) +
                        cs.A.transpose() * (Tc1 * dd.f) + channel_quad_vec(dl, cs.C, S1, sd.d) +
                        channel_quad_vec(dl, cs.C, T1, dd.d) + sd.q;
    };
    for (int l = N - 1; l >= k + 1; --l) step(l);

    const StageCoeffs& da = spec.stage(k, k);
    const CompositeCoeffs ca = spec.composites(k, k);
    const Matrix& dk = spec.delta(k);
    const Matrix& S1 = tb.state_cost(k, k + 1);
    const Matrix& Sc1 = tb.mean_cost(k, k + 1);
    const Matrix ST = S1 + tb.path_coupling(k, k + 1);
    const Matrix ScT = Sc1 + tb.mean_path_coupling(k, k + 1);

    StageOperators& op = tb.ops(k);
    op.convexity = ca.R + ca.B.transpose() * Sc1 * ca.B + channel_quad(dk, ca.D, S1, ca.D);
    // Same statistic with the mean/fluctuation weightings exchanged; kept
    // because published reference tables for this solver follow it.
    op.convexity_exchanged =
        symmetrize(ca.R + ca.B.transpose() * S1 * ca.B + channel_quad(dk, ca.D, Sc1, ca.D));
    op.stationarity = ca.R + ca.B.transpose() * ScT * ca.B + channel_quad(dk, ca.D, ST, ca.D);
    op.stationarity_state = ca.B.transpose() * ScT * ca.A + channel_quad(dk, ca.D, ST, ca.C) +
                            ca.B.transpose() * tb.initial_coupling(k, k + 1);
    op.stationarity_offset = ca.B.transpose() * (ScT * da.f) +
                             channel_quad_vec(dk, ca.D, ST, da.d) +
                             ca.B.transpose() * tb.offset(k, k + 1) + da.rho;
    finalize_stage_ops(op, tol);
    op.open_gain = op.gain;  // zero feedback part

    if (!op.gain.allFinite() || !op.feedforward.allFinite()) {
      throw std::runtime_error("open_loop_backward: non-finite stage operators (blow-up)");
    }

    step(k);
  }
  return tb;
}

BackwardTables feedback_backward(const ProblemSpec& spec, int t0, const Tolerances& tol) {
  tol.validate();
  const int N = spec.horizon();
  const int n = spec.n();
  const int m = spec.m();
  if (t0 < 0 || t0 >= N) {
    throw std::invalid_argument("feedback_backward: start stage out of range");
  }

  BackwardTables tb(SolverKind::feedback, t0, N, n, m);

  for (int k = N - 1; k >= t0; --k) {
    const TerminalCoeffs& term = spec.terminal(k);
    tb.state_cost(k, N) = term.G;
    tb.mean_cost(k, N) = term.G + term.G_bar;
    tb.initial_coupling(k, N) = term.F;
    tb.offset(k, N) = term.g;

    auto step = [&](int l) {
      const StageCoeffs& sd = spec.stage(k, l);
      const CompositeCoeffs cs = spec.composites(k, l);
      const Matrix& dl = spec.delta(l);
      const Matrix& Ph = tb.phi(l);
      const Vector& v_l = tb.ops(l).feedforward;

      const Matrix Acl = sd.A + sd.B * Ph;
      const Matrix AclC = cs.A + cs.B * Ph;
      const std::vector<Matrix> Ccl = closed_loop(sd.C, sd.D, Ph);
      const std::vector<Matrix> CclC = closed_loop(cs.C, cs.D, Ph);

      const Matrix& S1 = tb.state_cost(k, l + 1);
      const Matrix& Sc1 = tb.mean_cost(k, l + 1);

      tb.state_cost(k, l) = symmetrize(sd.Q + Ph.transpose() * sd.R * Ph +
                                       Acl.transpose() * S1 * Acl +
                                       channel_quad(dl, Ccl, S1, Ccl));
      tb.mean_cost(k, l) = symmetrize(cs.Q + Ph.transpose() * cs.R * Ph +
                                      AclC.transpose() * Sc1 * AclC +
                                      channel_quad(dl, CclC, S1, CclC));

      tb.initial_coupling(k, l) = AclC.transpose() * tb.initial_coupling(k, l + 1);

      const Matrix beta = Ph.transpose() * cs.R + AclC.transpose() * Sc1 * cs.B +
                          channel_quad(dl, CclC, S1, cs.D);
      tb.offset(k, l) = beta * v_l + AclC.transpose() * (Sc1 * sd.f + tb.offset(k, l + 1)) +
                        channel_quad_vec(dl, CclC, S1, sd.d) + Ph.transpose() * sd.rho + sd.q;
    };
    for (int l = N - 1; l >= k + 1; --l) step(l);

    const StageCoeffs& da = spec.stage(k, k);
    const CompositeCoeffs ca = spec.composites(k, k);
    const Matrix& dk = spec.delta(k);
    const Matrix& S1 = tb.state_cost(k, k + 1);
    const Matrix& Sc1 = tb.mean_cost(k, k + 1);

    StageOperators& op = tb.ops(k);
    op.convexity = ca.R + ca.B.transpose() * Sc1 * ca.B + channel_quad(dk, ca.D, S1, ca.D);
    // The self-consistent system has no path couplings; the deviation form
    // itself plays the stationarity role.
    op.stationarity = op.convexity;
    op.stationarity_state = ca.B.transpose() * Sc1 * ca.A + channel_quad(dk, ca.D, S1, ca.C) +
                            ca.B.transpose() * tb.initial_coupling(k, k + 1);
    op.stationarity_offset = ca.B.transpose() * (Sc1 * da.f) +
                             channel_quad_vec(dk, ca.D, S1, da.d) +
                             ca.B.transpose() * tb.offset(k, k + 1) + da.rho;
    finalize_stage_ops(op, tol);
    op.convexity_exchanged = op.convexity;
    op.open_gain = Matrix::Zero(m, n);
    tb.set_phi(k, op.gain);

    if (!op.gain.allFinite() || !op.feedforward.allFinite()) {
      throw std::runtime_error("feedback_backward: non-finite stage operators (blow-up)");
    }

    step(k);
  }
  return tb;
}

}  // namespace tilq
