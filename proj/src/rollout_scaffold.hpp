#pragma once

#include <algorithm>
#include <span>
#include <string>

#include "storopt/controllers.hpp"

namespace storopt::detail {

// Receding-horizon loop shared by the measure and min-max controllers.
// `decide(k, window, realized_window, diag)` returns the proposed first step
// for 0-based step k; the loop clamps it into the step-1 admissible interval,
// advances the carried level and assembles the result.
template <typename Decide>
RolloutResult run_rollout(const ChainLpInstance& full, std::span<const double> realized,
                          const ControllerConfig& config, Decide&& decide) {
  config.validate();
  check_structure(full);
  const std::size_t n = full.size();
  if (realized.size() != n) throw InvalidInstance("realized prices do not match the horizon");
  const FeasibilityReport rep = check_feasible(full);
  if (!rep.feasible) throw Infeasible(rep.first_violation, "full-horizon instance infeasible");

  const ChainLpInstance extended = extend_horizon(full, realized, config.extension_hours(full.size()));
  const double q = full.retention;

  RolloutResult out;
  out.schedule.resize(n);
  out.steps.resize(n);
  double level = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t len = std::min(config.window, extended.size() - k);
    ChainLpInstance window = build_window_subinstance(extended, k + 1, len, level);
    const std::span<const double> realized_window(extended.costs.data() + k, len);
    StepDiagnostics& diag = out.steps[k];
    double step = 0.0;
    try {
      step = decide(k, window, realized_window, diag);
    } catch (const Infeasible& e) {
      throw RolloutError(k + 1, "window subproblem infeasible at step " + std::to_string(k + 1) + ": " +
                                    e.what());
    }
    const double lo = std::max(0.0, window.lower[0]);
    const double hi = std::min(window.charge_cap[0], window.upper[0]);
    step = std::clamp(step, lo, std::max(lo, hi));
    diag.chosen = step;
    out.schedule[k] = step;
    level = q * level + step;
  }

  const RealizedOutcome outcome = evaluate_realized(full, out.schedule, realized);
  out.realized_cost = outcome.cost;
  out.final_level = outcome.final_level;
  out.surplus_value = outcome.surplus;
  return out;
}

}  // namespace storopt::detail
