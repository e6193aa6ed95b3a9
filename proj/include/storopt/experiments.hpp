#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "storopt/chain_lp.hpp"
#include "storopt/controllers.hpp"
#include "storopt/prices.hpp"
#include "storopt/pth.hpp"

namespace storopt {

/// Full-horizon instance together with the realized prices and the demand it
/// was built from.
struct SystemInputs {
  ChainLpInstance instance;
  std::vector<double> prices;  // EUR/kWh, realized
  std::vector<double> demand;  // kWh per hour
};

SystemInputs make_system(std::vector<double> demand, std::vector<double> prices,
                         const HouseholdSpec& spec = {});

/// Synthetic household over `hours` starting 1 July, demand and prices drawn
/// from independent streams of `seed`.
SystemInputs make_synthetic_system(std::size_t hours, std::uint64_t seed,
                                   const HouseholdSpec& spec = {},
                                   const DemandProfile& demand = {},
                                   const PriceProfile& prices = {});

enum class Method { Median, Minmax };
Method parse_method(std::string_view text);
std::string method_name(Method m);

struct DeltaSweepConfig {
  std::vector<double> deltas = full_grid();
  std::vector<Method> methods{Method::Median, Method::Minmax};
  std::size_t repeats = 25;
  std::size_t realizations = 5000;  // sensitivity sample per delta
  std::uint64_t seed = 0;
  ControllerConfig controller;      // delta and seed are overridden per cell
  int threads = 0;                  // cells in parallel; 1 runs them in order

  void validate() const;

  static std::vector<double> full_grid();  // 0.1, 0.2, ..., 2.5
  static std::vector<double> desk_grid();   // 0.1, 0.5, 1.0, 1.5, 2.0, 2.5
  /// m = 100, 25 repeats, 200 realizations on the desk grid.
  static DeltaSweepConfig desk();
};

/// Seed of repeat `repeat` under `master`, shared by every delta and method
/// so cells differ only by what they vary.
std::uint64_t repeat_seed(std::uint64_t master, std::uint64_t repeat);

struct SweepRow {
  Method method = Method::Median;
  double delta = 0.0;
  std::size_t runs = 0;            // completed rollouts
  double mean_cost = 0.0;          // EUR
  double std_cost = 0.0;           // EUR, sample sd over repeats
  double mean_surplus = 0.0;       // EUR, reported, never netted
  std::size_t sandwich_violations = 0;
  std::size_t infeasible_runs = 0; // schedules breaking the full-horizon bounds
  double max_gap = 0.0;            // largest min-max duality gap over all steps
  double runtime_s = 0.0;          // wall time summed over the cell's rollouts
  std::string error;               // first failure, empty when every run completed
};

struct SweepReport {
  double perfect_foresight = 0.0;  // EUR
  double no_storage = 0.0;         // EUR
  std::vector<SweepRow> rows;      // method-major, delta ascending
};

SweepReport run_delta_sweep(const SystemInputs& system, const DeltaSweepConfig& config);

struct SensitivityRow {
  Method method = Method::Median;
  double delta = 0.0;
  std::size_t realizations = 0;
  double mean_cost = 0.0;  // EUR over realizations
  double std_cost = 0.0;   // EUR, sample sd
  double rollout_cost = 0.0;  // EUR, the fixed schedule under the base prices
  bool feasible = false;
  bool sandwiched = false;    // perfect foresight <= rollout_cost <= no storage
  double max_gap = 0.0;       // min-max only
  double runtime_s = 0.0;
};

/// For each delta: one rollout fixes the schedule, then its cost is
/// evaluated under `realizations` price paths base + delta * OU over the whole
/// horizon. The paths are shared across deltas.
std::vector<SensitivityRow> run_sensitivity(const SystemInputs& system, Method method,
                                            const DeltaSweepConfig& config);

/// Runtimes are left out so that reports compare byte for byte; they go to
/// write_sweep_timings.
void write_sweep_csv(std::ostream& os, const SweepReport& report);
void write_sweep_json(std::ostream& os, const SweepReport& report);
void write_sweep_timings(std::ostream& os, const SweepReport& report);
void write_sensitivity_csv(std::ostream& os, const std::vector<SensitivityRow>& rows);

/// Spearman rank correlation, average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace storopt
