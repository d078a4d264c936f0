#include "tilq/example.hpp"

namespace tilq {

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

Matrix col2(double a, double b) {
  Matrix M(2, 1);
  M << a, b;
  return M;
}

Matrix row2(double a, double b) {
  Matrix M(1, 2);
  M << a, b;
  return M;
}

}  // namespace

ProblemSpec builtin_example() {
  const int n = 2, m = 1, p = 1, N = 4;
  const Matrix A[4] = {mat2(1, 0.4, 0.3, 2), mat2(1.102, -0.24, 0.53, 1.89),
                       mat2(1.89, 0.49, 0, 1.75), mat2(0.8, -0.4, 0.2, 0.7)};
  const Matrix B[4] = {col2(1.2, -0.5), col2(1, 1), col2(1.2, 0.2), col2(1, 0.3)};
  const Matrix D[4] = {col2(1, 0.3), col2(1, 0.4), col2(0.45, 0.25), col2(0.52, 0)};
  const Matrix Q[4] = {mat2(3, 0.5, 0.5, -2), mat2(2, -0.65, -0.65, 0),
                       mat2(0.5, 0.5, 0.5, -2), mat2(-0.1, 0, 0, -0.75)};
  const double R[4] = {0.0, -2.5, 1.0, -0.5};

  std::vector<StageCoeffs> stages;
  stages.reserve(N);
  for (int k = 0; k < N; ++k) {
    StageCoeffs s = ProblemSpec::zero_stage(n, m, p);
    s.A = A[k];
    s.B = B[k];
    s.D[0] = D[k];
    s.Q = Q[k];
    s.R = Matrix::Constant(1, 1, R[k]);
    stages.push_back(std::move(s));
  }

  TerminalCoeffs tc = ProblemSpec::zero_terminal(n);
  tc.G = mat2(1, -0.1, -0.1, 1);
  tc.G_bar = mat2(-0.3, 0, 0, -0.3);

  std::vector<Matrix> delta(N, Matrix::Constant(1, 1, 1.0));
  return ProblemSpec(n, m, p, N, /*stationary_in_t=*/true, std::move(stages), {tc},
                     std::move(delta));
}

const std::vector<ExampleMixedCase>& example_mixed_cases() {
  static const std::vector<ExampleMixedCase> cases = [] {
    // {phi rows (4 x 2)}, expected deviation forms, expected stationarity ops
    struct Raw {
      double phi[4][2];
      double convexity[4];
      double stationarity[4];
    };
    const Raw raw[10] = {
        {{{1.4090, 1.4172}, {-0.1241, 1.4897}, {0.7147, -0.2050}, {0.7254, -0.0631}},
         {42.1215, 21.2758, 3.1578, 0.4734},
         {-2.1680, -10.6485, 0.4740, 0.4734}},
        {{{0.7269, -0.3034}, {0.4889, 1.0347}, {0.7172, 1.6302}, {0.6715, -1.2075}},
         {106.9951, 28.5844, 2.3227, 0.4734},
         {-2.4665, -10.5353, 0.4860, 0.4734}},
        {{{0.3192, 0.3129}, {-0.1022, -0.2414}, {1.3703, -1.7115}, {0.3252, -0.7549}},
         {35.1212, 1.8350, 1.7640, 0.4734},
         {-0.8786, -9.8337, 0.4876, 0.4734}},
        {{{-0.7648, -1.4023}, {-0.1924, 0.8886}, {-0.6156, 0.7481}, {-1.0616, 2.3505}},
         {20.1218, 2.2184, 0.8268, 0.4734},
         {-1.3929, -9.2281, 0.4817, 0.4734}},
        {{{-0.4390, -1.7947}, {-0.0825, -1.9330}, {-0.6669, 0.1873}, {0.7223, 2.5855}},
         {52.1877, 31.3899, 5.4614, 0.4734},
         {-1.9877, -10.6047, 0.4485, 0.4734}},
        {{{0.4900, 0.7394}, {0.3035, -0.6003}, {0.1001, -0.5445}, {0.8404, -0.8880}},
         {31.4336, 2.6274, 2.9500, 0.4734},
         {-1.0423, -9.8977, 0.4799, 0.4734}},
        {{{0.9610, 0.1240}, {1.3546, -1.0722}, {-2.1384, -0.8396}, {1.7119, -0.1941}},
         {429.0833, 38.2114, 6.7849, 0.4734},
         {1.1514, -8.0070, 0.4581, 0.4734}},
        {{{1.3790, -1.0582}, {2.9080, 0.8252}, {-0.1977, -1.2078}, {1.4367, -1.9609}},
         {112.4586, 3.2533, 4.0958, 0.4734},
         {1.7922, -9.5504, 0.4799, 0.4734}},
        {{{-1.1564, -0.5336}, {-0.8314, -0.9792}, {-1.7502, -0.2857}, {0.0229, -0.2620}},
         {7.6517, 5.3349, 1.3968, 0.4734},
         {-0.8077, -8.7128, 0.4881, 0.4734}},
        {{{0.0513, 0.8261}, {-0.3031, 0.0230}, {-0.1952, -0.2176}, {0.6601, -0.0679}},
         {11.0638, 4.5685, 2.9632, 0.4734},
         {-1.2944, -9.9027, 0.4752, 0.4734}},
    };
    std::vector<ExampleMixedCase> out;
    out.reserve(10);
    for (const Raw& r : raw) {
      ExampleMixedCase c;
      for (int k = 0; k < 4; ++k) c.phi.push_back(row2(r.phi[k][0], r.phi[k][1]));
      for (int k = 0; k < 4; ++k) {
        c.convexity[k] = r.convexity[k];
        c.stationarity[k] = r.stationarity[k];
      }
      out.push_back(std::move(c));
    }
    return out;
  }();
  return cases;
}

std::array<double, 4> example_open_convexity_reference() {
  return {8.7645, -0.4783, 1.6935, 0.7193};
}

std::array<double, 4> example_feedback_convexity_reference() {
  return {-11.0590, 20.5335, -0.5593, 0.4734};
}

std::array<std::array<double, 2>, 4> example_last_case_gains() {
  return {{{1.4347, 4.2547}, {-0.3247, -0.5193}, {1.4568, 0.3845}, {-1.1787, 0.4035}}};
}

}  // namespace tilq
