#pragma once

#include <array>
#include <vector>

#include "tilq/problem.hpp"

namespace tilq {

/// Built-in 2-state / 1-control / 4-stage benchmark problem with
/// control-multiplicative noise, indefinite state and control weights, and a
/// negative mean terminal weight. Stationary in t; unit noise second moment.
ProblemSpec builtin_example();

/// Ten reference pure-feedback parts (one 1x2 gain per stage each) for the
/// benchmark problem, together with the operator tuples they produce.
struct ExampleMixedCase {
  std::vector<Matrix> phi;               // 4 gains
  std::array<double, 4> convexity;       // expected deviation form per stage
  std::array<double, 4> stationarity;    // expected stationarity operator per stage
};
const std::vector<ExampleMixedCase>& example_mixed_cases();

/// Reference per-stage values for the zero-feedback (open-loop) solve of the
/// benchmark problem. These match the solver's exchanged-weighting statistic;
/// see StageOperators::convexity_exchanged.
std::array<double, 4> example_open_convexity_reference();

/// Reference per-stage values circulated for the self-consistent feedback
/// solve of the benchmark problem. Retained verbatim for comparison output;
/// not reproduced by the solvers (the exact-lattice oracle certifies the
/// solver values instead).
std::array<double, 4> example_feedback_convexity_reference();

/// Closed-loop gain rows produced by the last mixed case.
std::array<std::array<double, 2>, 4> example_last_case_gains();

}  // namespace tilq
