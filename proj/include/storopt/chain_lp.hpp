#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace storopt {

// Storage LP over n hourly steps:
//
//   min  sum_i c_i x_i
//   s.t. 0 <= x_i <= u_i
//        a_i <= sum_{j<=i} q^{i-j} x_j <= b_i
//
// x_i is the energy bought in step i, the inner sum is the (discounted)
// cumulative level y_i = q y_{i-1} + x_i with y_0 = 0.
struct ChainLpInstance {
  std::vector<double> costs;       // EUR/kWh
  std::vector<double> lower;       // kWh
  std::vector<double> upper;       // kWh
  std::vector<double> charge_cap;  // kWh per step
  double retention = 1.0;          // q in (0, 1]

  std::size_t size() const { return costs.size(); }
};

struct ChargeSchedule {
  std::vector<double> x;  // kWh per step
  double objective = 0.0; // EUR
};

// Structural problems (length mismatch, q out of range, a > b, u < 0).
class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Instance has no feasible schedule. `index` is 1-based.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(std::size_t index, const std::string& what)
      : std::runtime_error(what), index(index) {}
  std::size_t index;
};

// The solver detected a state that exact arithmetic would never produce.
class InternalConsistency : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FeasibilityReport {
  bool feasible = true;
  std::size_t first_violation = 0;  // 1-based, 0 when feasible
};

/// Absolute slack used by every constraint check: 1e-9 * max(1, |bound|).
double constraint_slack(double bound);

/// Throws InvalidInstance on structural defects.
void check_structure(const ChainLpInstance& inst);

/// Envelope test: forward max-level and forced min-level recursions.
FeasibilityReport check_feasible(const ChainLpInstance& inst);

/// Exact optimum by a forward dynamic program over convex piecewise-linear
/// value functions in level space, followed by a backward recovery pass.
/// Ties resolve towards the smallest level at every step.
ChargeSchedule solve_chain(const ChainLpInstance& inst);

/// Same as solve_chain with a caller-provided cost vector, so scenario loops
/// can reuse one set of bounds without copying the instance.
ChargeSchedule solve_chain(const ChainLpInstance& bounds, std::span<const double> costs);

double objective(const ChainLpInstance& inst, std::span<const double> x);
std::vector<double> level_trajectory(const ChainLpInstance& inst, std::span<const double> x);

/// True when 0 <= x <= u and a <= y <= b hold within constraint_slack.
/// On failure `violation` (if given) receives the first offending 1-based step.
bool schedule_feasible(const ChainLpInstance& inst, std::span<const double> x,
                       std::size_t* violation = nullptr);

/// Charge as late as possible while meeting every lower bound.
ChargeSchedule latest_moment_schedule(const ChainLpInstance& inst);

}  // namespace storopt
