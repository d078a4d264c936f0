#pragma once

#include <cstdint>
#include <vector>

#include "tilq/problem.hpp"
#include "tilq/simulate.hpp"

namespace tilq::testing {

struct RandomSpecOptions {
  int n_min = 1, n_max = 3;
  int m_min = 1, m_max = 3;
  int p_max = 2;
  int N_min = 2, N_max = 5;
  bool stationary = false;
  bool two_point = false;     // forces p = 1
  bool inhomogeneous = true;  // nonzero f, d, q, rho, F, g
  bool mean_field = true;     // nonzero barred families
  bool h_satisfying = false;  // PSD state/terminal weights, PD control weights
  double scale = 0.35;
};

inline Matrix random_matrix(RngStream& rng, int r, int c, double scale) {
  Matrix M(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) M(i, j) = scale * rng.normal();
  }
  return M;
}

inline Vector random_vector(RngStream& rng, int size, double scale) {
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = scale * rng.normal();
  return v;
}

inline Matrix random_psd(RngStream& rng, int nn, double scale) {
  const Matrix L = random_matrix(rng, nn, nn, scale);
  return L * L.transpose();
}

inline ProblemSpec random_spec(std::uint64_t seed, RandomSpecOptions opt = {}) {
  RngStream rng(seed, 0x5EC);
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.uniform01() * (hi - lo + 1)) % (hi - lo + 1);
  };
  const int n = pick(opt.n_min, opt.n_max);
  const int m = pick(opt.m_min, opt.m_max);
  const int p = opt.two_point ? 1 : pick(1, opt.p_max);
  const int N = pick(opt.N_min, opt.N_max);
  const double s = opt.scale;

  auto make_stage = [&]() {
    StageCoeffs sc = ProblemSpec::zero_stage(n, m, p);
    sc.A = random_matrix(rng, n, n, 0.8 * s + 0.5 / std::sqrt(double(n)));
    sc.B = random_matrix(rng, n, m, 2.0 * s);
    for (int i = 0; i < p; ++i) {
      sc.C[i] = random_matrix(rng, n, n, s);
      sc.D[i] = random_matrix(rng, n, m, s);
    }
    if (opt.mean_field) {
      sc.A_bar = random_matrix(rng, n, n, 0.5 * s);
      sc.B_bar = random_matrix(rng, n, m, 0.5 * s);
      for (int i = 0; i < p; ++i) {
        sc.C_bar[i] = random_matrix(rng, n, n, 0.5 * s);
        sc.D_bar[i] = random_matrix(rng, n, m, 0.5 * s);
      }
    }
    if (opt.h_satisfying) {
      sc.Q = random_psd(rng, n, s);
      sc.Q_bar = random_psd(rng, n, 0.5 * s);
      sc.R = random_psd(rng, m, s) + 0.4 * Matrix::Identity(m, m);
      sc.R_bar = random_psd(rng, m, 0.5 * s);
    } else {
      sc.Q = symmetrize(random_matrix(rng, n, n, s));
      sc.Q_bar = symmetrize(random_matrix(rng, n, n, 0.5 * s));
      sc.R = symmetrize(random_matrix(rng, m, m, s)) + 0.6 * Matrix::Identity(m, m);
      sc.R_bar = symmetrize(random_matrix(rng, m, m, 0.3 * s));
    }
    if (opt.inhomogeneous) {
      sc.f = random_vector(rng, n, s);
      for (int i = 0; i < p; ++i) sc.d[i] = random_vector(rng, n, s);
      sc.q = random_vector(rng, n, s);
      sc.rho = random_vector(rng, m, s);
    }
    return sc;
  };

  std::vector<StageCoeffs> stages;
  const int count = opt.stationary ? N : N * (N + 1) / 2;
  stages.reserve(count);
  for (int i = 0; i < count; ++i) stages.push_back(make_stage());

  std::vector<TerminalCoeffs> terminals;
  terminals.reserve(N);
  for (int t = 0; t < N; ++t) {
    TerminalCoeffs tc = ProblemSpec::zero_terminal(n);
    if (opt.h_satisfying) {
      tc.G = random_psd(rng, n, s);
      tc.G_bar = random_psd(rng, n, 0.5 * s);
    } else {
      tc.G = symmetrize(random_matrix(rng, n, n, s));
      tc.G_bar = symmetrize(random_matrix(rng, n, n, 0.5 * s));
    }
    if (opt.inhomogeneous) {
      tc.F = random_matrix(rng, n, n, 0.5 * s);
      tc.g = random_vector(rng, n, s);
    }
    terminals.push_back(std::move(tc));
  }

  std::vector<Matrix> delta;
  delta.reserve(N);
  for (int k = 0; k < N; ++k) {
    if (p == 1) {
      delta.push_back(Matrix::Constant(1, 1, 0.3 + rng.uniform01()));
    } else {
      delta.push_back(random_psd(rng, p, 0.6) + 0.1 * Matrix::Identity(p, p));
    }
  }

  return ProblemSpec(n, m, p, N, opt.stationary, std::move(stages), std::move(terminals),
                     std::move(delta));
}

inline std::vector<Matrix> random_phi(std::uint64_t seed, const ProblemSpec& spec, int t,
                                      double scale = 0.5) {
  RngStream rng(seed, 0xF1);
  std::vector<Matrix> phi;
  for (int k = t; k < spec.horizon(); ++k) {
    phi.push_back(random_matrix(rng, spec.m(), spec.n(), scale));
  }
  return phi;
}

/// n = m = p = 1, N = 1, A = B = 1, C = D = 0, R = 1, G = 1, everything else 0.
inline ProblemSpec one_step_spec() {
  StageCoeffs sc = ProblemSpec::zero_stage(1, 1, 1);
  sc.A = Matrix::Constant(1, 1, 1.0);
  sc.B = Matrix::Constant(1, 1, 1.0);
  sc.R = Matrix::Constant(1, 1, 1.0);
  TerminalCoeffs tc = ProblemSpec::zero_terminal(1);
  tc.G = Matrix::Constant(1, 1, 1.0);
  return ProblemSpec(1, 1, 1, 1, true, {sc}, {tc}, {Matrix::Constant(1, 1, 1.0)});
}

/// Every coefficient zero except a chosen terminal weight.
inline ProblemSpec zero_spec(int n, int m, int N, double terminal_weight = 0.0,
                             bool identity_dynamics = false) {
  std::vector<StageCoeffs> stages;
  for (int k = 0; k < N; ++k) {
    StageCoeffs sc = ProblemSpec::zero_stage(n, m, 1);
    if (identity_dynamics) sc.A = Matrix::Identity(n, n);
    stages.push_back(std::move(sc));
  }
  TerminalCoeffs tc = ProblemSpec::zero_terminal(n);
  tc.G = terminal_weight * Matrix::Identity(n, n);
  return ProblemSpec(n, m, 1, N, true, std::move(stages), {tc},
                     std::vector<Matrix>(N, Matrix::Identity(1, 1)));
}

}  // namespace tilq::testing
