#include "tilq/linalg.hpp"

#include <gtest/gtest.h>

#include "tilq/example.hpp"
#include "tilq/recursions.hpp"
#include "tilq/simulate.hpp"
#include "testutil.hpp"

namespace tilq {
namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = rows.size();
  const int c = rows.begin()->size();
  Matrix M(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) M(i, j++) = v;
    ++i;
  }
  return M;
}

TEST(Symmetrize, Basic) {
  const Matrix M = from_rows({{1, 2}, {0, 1}});
  const Matrix S = symmetrize(M);
  EXPECT_TRUE(S.isApprox(from_rows({{1, 1}, {1, 1}})));
  EXPECT_TRUE(symmetrize(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  const Matrix sym = from_rows({{2, -1}, {-1, 5}});
  EXPECT_EQ((symmetrize(sym) - sym).norm(), 0.0);
  EXPECT_THROW(symmetrize(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(Pinv, IdentityAndDiagonal) {
  EXPECT_TRUE(pinv(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 2.0;
  const Matrix Dp = pinv(D);
  EXPECT_NEAR(Dp(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(Dp(1, 1), 0.0, 1e-15);
}

void expect_penrose(const Matrix& M, double tol) {
  const Matrix P = pinv(M);
  const double scale_m = std::max(1.0, M.norm());
  const double scale_p = std::max(1.0, P.norm());
  EXPECT_LE((M * P * M - M).norm() / scale_m, tol);
  EXPECT_LE((P * M * P - P).norm() / scale_p, tol);
  const Matrix MP = M * P;
  const Matrix PM = P * M;
  EXPECT_LE((MP - MP.transpose()).norm() / std::max(1.0, MP.norm()), tol);
  EXPECT_LE((PM - PM.transpose()).norm() / std::max(1.0, PM.norm()), tol);
}

TEST(Pinv, PenroseConditionsRectangular) {
  RngStream rng(42, 0);
  const Matrix M = testing::random_matrix(rng, 4, 3, 1.0);
  expect_penrose(M, 1e-10);
}

TEST(Pinv, PenroseConditionsAcrossRanks) {
  RngStream rng(7, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + static_cast<int>(rng.uniform01() * 6);
    const int c = 1 + static_cast<int>(rng.uniform01() * 6);
    const int rank = static_cast<int>(rng.uniform01() * (std::min(r, c) + 1));
    Matrix M = Matrix::Zero(r, c);
    for (int i = 0; i < rank; ++i) {
      M += testing::random_vector(rng, r, 1.0) * testing::random_vector(rng, c, 1.0).transpose();
    }
    expect_penrose(M, 1e-10);
  }
}

TEST(Pinv, InvolutionOnWellConditioned) {
  RngStream rng(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix M =
        testing::random_matrix(rng, 4, 4, 1.0) + 3.0 * Matrix::Identity(4, 4);
    EXPECT_LE((pinv(pinv(M)) - M).norm() / M.norm(), 1e-9);
  }
}

TEST(MinEigSym, Examples) {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 3.0;
  D(1, 1) = -1.0;
  EXPECT_NEAR(min_eig_sym(D), -1.0, 1e-14);
  EXPECT_NEAR(min_eig_sym(Matrix::Identity(4, 4)), 1.0, 1e-14);
  EXPECT_NEAR(min_eig_sym(from_rows({{2, 1}, {1, 2}})), 1.0, 1e-14);
}

TEST(IsPsd, Examples) {
  EXPECT_TRUE(is_psd(Matrix::Zero(3, 3)));
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = -1e-3;
  EXPECT_FALSE(is_psd(D));
}

TEST(IsPsd, NegativeScalarFromBenchmarkOpenRun) {
  // The exchanged-weighting statistic of the open-loop solve on the built-in
  // problem is negative at stage 1, so the PSD test must reject it.
  const BackwardTables tb = open_loop_backward(builtin_example(), 0);
  const Matrix o1 = tb.ops(1).convexity_exchanged;
  EXPECT_NEAR(o1(0, 0), -0.4783, 1e-3);
  EXPECT_FALSE(is_psd(o1));
  // The solver's own deviation form is negative there as well.
  EXPECT_FALSE(is_psd(tb.ops(1).convexity));
}

TEST(IsPsd, InvariantUnderSymmetrizeAndPermutation) {
  RngStream rng(11, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix M = symmetrize(testing::random_matrix(rng, 4, 4, 1.0));
    EXPECT_EQ(is_psd(M), is_psd(symmetrize(M)));
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
    perm.setIdentity();
    std::vector<int> order{2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) perm.indices()(i) = order[i];
    const Matrix MP = perm.transpose() * M * perm;
    EXPECT_EQ(is_psd(M), is_psd(MP));
  }
}

TEST(InRange, Examples) {
  Matrix O = Matrix::Zero(2, 2);
  O(0, 0) = 1.0;
  Vector v(2);
  v << 3, 0;
  EXPECT_TRUE(in_range(O, v));
  v << 0, 1;
  EXPECT_FALSE(in_range(O, v));
  const Matrix inv = from_rows({{2, 1}, {0.5, 3}});
  RngStream rng(5, 4);
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_TRUE(in_range(inv, testing::random_vector(rng, 2, 2.0)));
  }
  EXPECT_THROW(in_range(O, Vector::Zero(3)), std::invalid_argument);
}

TEST(InRange, ConstructiveMembership) {
  RngStream rng(13, 5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix O = testing::random_matrix(rng, 3, 3, 1.0);
    O.col(2) = O.col(0) - O.col(1);  // force rank deficiency
    const Vector x = testing::random_vector(rng, 3, 1.5);
    EXPECT_TRUE(in_range(O, O * x));
  }
}

TEST(Tolerances, RejectsNonPositive) {
  Tolerances t;
  t.psd_tol = 0.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  EXPECT_THROW(pinv(Matrix::Identity(2, 2), t), std::invalid_argument);
}

TEST(Finiteness, RejectedBySolvers) {
  Matrix M = Matrix::Identity(2, 2);
  M(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(pinv(M), std::invalid_argument);
}

}  // namespace
}  // namespace tilq
