#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "storopt/chain_lp.hpp"
#include "storopt/controllers.hpp"
#include "storopt/ou.hpp"

namespace storopt {

struct MinmaxResult {
  double first_step = 0.0;     // x̄_1 clamped to the step-1 admissible interval
  std::vector<double> x;       // x̄, a convex combination of chain optima
  double primal = 0.0;         // max_j c^j . x̄
  double dual = 0.0;           // best min_x (sum_j lambda_j c^j) . x seen
  double gap = 0.0;            // (primal - dual) / max(1, |dual|)
  std::size_t iterations = 0;  // chain solves
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(double gap, const std::string& what) : std::runtime_error(what), gap(gap) {}
  double gap;
};

/// min_x max_j c^j . x over the window polytope. Scenario weights are updated
/// by column generation: each round solves the chain LP under the current
/// weighted cost and re-solves the scenario-vs-candidates matrix game.
MinmaxResult minmax_first_step(const ChainLpInstance& window, const PriceScenarioSet& scenarios,
                               double gap_tol = 1e-4, std::size_t max_iterations = 2000);

inline constexpr std::size_t kMinmaxReferenceMaxSteps = 6;
inline constexpr std::size_t kMinmaxReferenceMaxScenarios = 5;

/// Exact robust value by enumerating the vertices of the epigraph LP in
/// (y, t). Desk-scale only: n <= 6, m <= 5.
double minmax_reference(const ChainLpInstance& window, const PriceScenarioSet& scenarios);

/// Same receding-horizon loop as sliding_window_rollout with the min-max
/// decision per step.
RolloutResult minmax_rollout(const ChainLpInstance& full, std::span<const double> realized,
                             const ScenarioSource& source, const ControllerConfig& config);

}  // namespace storopt
