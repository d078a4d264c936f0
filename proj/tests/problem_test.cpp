#include "tilq/problem.hpp"

#include <gtest/gtest.h>

#include "tilq/example.hpp"
#include "testutil.hpp"

#ifndef TILQ_DATA_DIR
#define TILQ_DATA_DIR "."
#endif

namespace tilq {
namespace {

const std::string kExampleFile = std::string(TILQ_DATA_DIR) + "/example4.json";

TEST(Loader, BenchmarkDocument) {
  const ProblemSpec spec = load_problem_file(kExampleFile);
  EXPECT_EQ(spec.n(), 2);
  EXPECT_EQ(spec.m(), 1);
  EXPECT_EQ(spec.p(), 1);
  EXPECT_EQ(spec.horizon(), 4);
  EXPECT_TRUE(spec.stationary_in_t());
  EXPECT_DOUBLE_EQ(spec.stage(0, 1).R(0, 0), -2.5);
  EXPECT_DOUBLE_EQ(spec.stage(2, 3).A(0, 1), -0.4);
  EXPECT_DOUBLE_EQ(spec.terminal(3).G(0, 1), -0.1);
  EXPECT_DOUBLE_EQ(spec.delta(2)(0, 0), 1.0);
}

TEST(Loader, MatchesBuiltinExample) {
  const ProblemSpec file = load_problem_file(kExampleFile);
  const ProblemSpec builtin = builtin_example();
  for (int t = 0; t < 4; ++t) {
    for (int k = t; k < 4; ++k) {
      EXPECT_EQ((file.stage(t, k).A - builtin.stage(t, k).A).norm(), 0.0);
      EXPECT_EQ((file.stage(t, k).B - builtin.stage(t, k).B).norm(), 0.0);
      EXPECT_EQ((file.stage(t, k).D[0] - builtin.stage(t, k).D[0]).norm(), 0.0);
      EXPECT_EQ((file.stage(t, k).Q - builtin.stage(t, k).Q).norm(), 0.0);
      EXPECT_EQ((file.stage(t, k).R - builtin.stage(t, k).R).norm(), 0.0);
    }
    EXPECT_EQ((file.terminal(t).G - builtin.terminal(t).G).norm(), 0.0);
    EXPECT_EQ((file.terminal(t).G_bar - builtin.terminal(t).G_bar).norm(), 0.0);
  }
}

TEST(Loader, AsymmetricWeightRejected) {
  const std::string doc = R"({
    "n": 2, "m": 2, "p": 1, "N": 1, "stationary_in_t": true,
    "matrices": {"R": [[[0, 1], [0, 0]]]},
    "noise": {"delta": [[[1]]]}
  })";
  EXPECT_THROW(load_problem(doc), std::invalid_argument);
}

TEST(Loader, MinimalOneStepDocument) {
  const std::string doc = R"({
    "n": 1, "m": 1, "p": 1, "N": 1, "stationary_in_t": true,
    "matrices": {"R": [1.0], "G": 1.0},
    "noise": {"delta": [1.0]}
  })";
  const ProblemSpec spec = load_problem(doc);
  EXPECT_EQ(spec.horizon(), 1);
  EXPECT_DOUBLE_EQ(spec.stage(0, 0).R(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(spec.terminal(0).G(0, 0), 1.0);
  EXPECT_EQ(spec.stage(0, 0).Q.norm(), 0.0);
}

TEST(Loader, NonPsdNoiseRejected) {
  const std::string doc = R"({
    "n": 1, "m": 1, "p": 1, "N": 1, "stationary_in_t": true,
    "matrices": {"R": [1.0]},
    "noise": {"delta": [-0.5]}
  })";
  EXPECT_THROW(load_problem(doc), std::invalid_argument);
}

TEST(Loader, MissingPairEntryRejected) {
  const std::string doc = R"({
    "n": 1, "m": 1, "p": 1, "N": 2, "stationary_in_t": false,
    "matrices": {"A": {"0,0": 1.0, "1,1": 1.0}},
    "noise": {"delta": [1.0, 1.0]}
  })";
  EXPECT_THROW(load_problem(doc), std::invalid_argument);  // (0,1) missing
}

TEST(Loader, DimensionMismatchRejected) {
  const std::string doc = R"({
    "n": 2, "m": 1, "p": 1, "N": 1, "stationary_in_t": true,
    "matrices": {"A": [[[1, 0, 0], [0, 1, 0]]]},
    "noise": {"delta": [1.0]}
  })";
  EXPECT_THROW(load_problem(doc), std::invalid_argument);
}

TEST(Loader, IndefiniteWeightsAccepted) {
  // Indefinite running costs and negative control weights are legal inputs.
  const ProblemSpec spec = load_problem_file(kExampleFile);
  EXPECT_LT(min_eig_sym(spec.stage(0, 0).Q), 0.0);
  EXPECT_LT(spec.stage(1, 1).R(0, 0), 0.0);
}

TEST(RoundTrip, BitIdentical) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    testing::RandomSpecOptions opt;
    opt.stationary = seed == 2;
    const ProblemSpec spec = testing::random_spec(seed, opt);
    const ProblemSpec again = load_problem(save_problem(spec));
    ASSERT_EQ(again.horizon(), spec.horizon());
    for (int t = 0; t < spec.horizon(); ++t) {
      for (int k = t; k < spec.horizon(); ++k) {
        const StageCoeffs& a = spec.stage(t, k);
        const StageCoeffs& b = again.stage(t, k);
        EXPECT_EQ((a.A - b.A).norm(), 0.0);
        EXPECT_EQ((a.A_bar - b.A_bar).norm(), 0.0);
        EXPECT_EQ((a.B - b.B).norm(), 0.0);
        EXPECT_EQ((a.Q - b.Q).norm(), 0.0);
        EXPECT_EQ((a.R - b.R).norm(), 0.0);
        EXPECT_EQ((a.q - b.q).norm(), 0.0);
        EXPECT_EQ((a.rho - b.rho).norm(), 0.0);
        EXPECT_EQ((a.f - b.f).norm(), 0.0);
        for (int i = 0; i < spec.p(); ++i) {
          EXPECT_EQ((a.C[i] - b.C[i]).norm(), 0.0);
          EXPECT_EQ((a.D[i] - b.D[i]).norm(), 0.0);
          EXPECT_EQ((a.d[i] - b.d[i]).norm(), 0.0);
        }
      }
      EXPECT_EQ((spec.terminal(t).G - again.terminal(t).G).norm(), 0.0);
      EXPECT_EQ((spec.terminal(t).F - again.terminal(t).F).norm(), 0.0);
      EXPECT_EQ((spec.terminal(t).g - again.terminal(t).g).norm(), 0.0);
    }
    for (int k = 0; k < spec.horizon(); ++k) {
      EXPECT_EQ((spec.delta(k) - again.delta(k)).norm(), 0.0);
    }
  }
}

TEST(Stationary, ReplicatesAcrossStartStages) {
  testing::RandomSpecOptions opt;
  opt.stationary = true;
  const ProblemSpec spec = testing::random_spec(17, opt);
  for (int k = 0; k < spec.horizon(); ++k) {
    for (int t = 0; t <= k; ++t) {
      EXPECT_EQ((spec.stage(t, k).A - spec.stage(0, k).A).norm(), 0.0);
      EXPECT_EQ((spec.stage(t, k).Q - spec.stage(0, k).Q).norm(), 0.0);
      EXPECT_EQ((spec.stage(t, k).R_bar - spec.stage(0, k).R_bar).norm(), 0.0);
    }
  }
}

TEST(Composites, BenchmarkAndDegenerate) {
  const ProblemSpec spec = builtin_example();
  const CompositeCoeffs c = spec.composites(0, 0);
  EXPECT_EQ((c.A - spec.stage(0, 0).A).norm(), 0.0);  // no barred dynamics
  Matrix expected(2, 2);
  expected << 0.7, -0.1, -0.1, 0.7;
  EXPECT_LE((spec.terminal_composite(0) - expected).norm(), 1e-15);

  // A_bar = -A makes the composite vanish.
  StageCoeffs sc = ProblemSpec::zero_stage(2, 1, 1);
  sc.A << 1, 2, 3, 4;
  sc.A_bar = -sc.A;
  const ProblemSpec cancel(2, 1, 1, 1, true, {sc}, {ProblemSpec::zero_terminal(2)},
                           {Matrix::Identity(1, 1)});
  EXPECT_EQ(cancel.composites(0, 0).A.norm(), 0.0);

  const ProblemSpec zero = testing::zero_spec(2, 1, 2);
  EXPECT_EQ(zero.composites(0, 1).A.norm(), 0.0);
  EXPECT_EQ(zero.composites(0, 1).Q.norm(), 0.0);
}

TEST(Composites, IndexOutOfRange) {
  const ProblemSpec spec = builtin_example();
  EXPECT_THROW(spec.composites(2, 1), std::out_of_range);
  EXPECT_THROW(spec.composites(0, 4), std::out_of_range);
}

TEST(BuiltinExample, MatchesPublishedData) {
  const ProblemSpec spec = builtin_example();
  EXPECT_DOUBLE_EQ(spec.stage(0, 0).R(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(spec.stage(0, 1).R(0, 0), -2.5);
  EXPECT_DOUBLE_EQ(spec.stage(0, 2).R(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(spec.stage(0, 3).R(0, 0), -0.5);
  Matrix G(2, 2);
  G << 1, -0.1, -0.1, 1;
  EXPECT_EQ((spec.terminal(0).G - G).norm(), 0.0);
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(spec.delta(k)(0, 0), 1.0);
  EXPECT_TRUE(spec.is_homogeneous());
}

}  // namespace
}  // namespace tilq
