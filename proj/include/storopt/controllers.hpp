#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "storopt/chain_lp.hpp"
#include "storopt/ou.hpp"

namespace storopt {

/// Aggregation applied to the scenario-optimal first steps.
class Measure {
 public:
  enum class Kind { Median, Mean, Quantile };

  static Measure median() { return Measure(Kind::Median, 0.5); }
  static Measure mean() { return Measure(Kind::Mean, 0.5); }
  static Measure quantile(double p);
  /// "median", "mean" or "quantile:<p>".
  static Measure parse(std::string_view text);

  Kind kind() const { return kind_; }
  double probability() const { return p_; }
  std::string name() const;

  /// Reorders `values`. Quantiles interpolate linearly between order
  /// statistics, so the median of an even sample is the mid-point of the
  /// two central values.
  double apply(std::span<double> values) const;

 private:
  Measure(Kind k, double p) : kind_(k), p_(p) {}
  Kind kind_;
  double p_;
};

struct ControllerConfig {
  std::size_t window = 120;      // h
  std::size_t scenarios = 1000;  // m
  Measure measure = Measure::median();
  double delta = 1.0;
  std::uint64_t seed = 0;
  OuParams noise;
  /// Hours appended past the horizon by 24 h periodic continuation.
  /// Defaults to window - 1 so every window has full length, or to 0 when one
  /// window already spans the whole horizon.
  std::optional<std::size_t> extension;
  /// 1 runs the serial reference kernels, 0 lets OpenMP decide.
  int threads = 0;
  double gap_tol = 1e-4;
  std::size_t max_iterations = 2000;

  void validate() const;
  std::size_t extension_hours(std::size_t horizon) const {
    return extension.value_or(window >= horizon ? 0 : window - 1);
  }
};

/// Produces the cost vector of scenario j for the window starting at step k
/// (0-based). `realized` holds the realized prices over the same window.
class ScenarioSource {
 public:
  virtual ~ScenarioSource() = default;
  virtual std::size_t count() const = 0;
  virtual void fill(std::size_t k, std::size_t j, std::span<const double> realized,
                    std::span<double> out) const = 0;
};

/// base + delta * OU noise, with base the realized prices over the window or,
/// when given, an external forecast series over the extended horizon.
class OuScenarioSource final : public ScenarioSource {
 public:
  OuScenarioSource(OuParams params, double delta, std::size_t count, std::uint64_t seed,
                   std::vector<double> forecast_base = {});
  std::size_t count() const override { return count_; }
  void fill(std::size_t k, std::size_t j, std::span<const double> realized,
            std::span<double> out) const override;

 private:
  OuParams params_;
  double delta_;
  std::size_t count_;
  std::uint64_t seed_;
  std::vector<double> forecast_base_;
};

struct StepDiagnostics {
  double chosen = 0.0;       // committed first step, kWh
  double spread_lo = 0.0;    // smallest scenario first step
  double spread_hi = 0.0;    // largest scenario first step
  double gap = 0.0;          // min-max relative duality gap (0 for the measure controller)
  std::size_t iterations = 0;
};

struct RolloutResult {
  std::vector<double> schedule;  // x*, kWh
  double realized_cost = 0.0;    // EUR, sum c_i x*_i over the horizon
  double final_level = 0.0;      // kWh above the lower bound after the last step
  double surplus_value = 0.0;    // final_level * mean realized price, reported only
  std::vector<StepDiagnostics> steps;
};

class RolloutError : public std::runtime_error {
 public:
  RolloutError(std::size_t step, const std::string& what) : std::runtime_error(what), step(step) {}
  std::size_t step;  // 1-based
};

class StateCorruption : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Horizon extended by `extra` steps: prices, caps, lower-bound increments
/// a_i - q a_{i-1} and widths b_i - a_i repeat with `period`.
ChainLpInstance extend_horizon(const ChainLpInstance& full, std::span<const double> realized,
                               std::size_t extra, std::size_t period = 24);

/// Bounds of the window starting at 1-based step k of `extended`, shifted by
/// the decayed carried level. Costs are copied from `extended`.
ChainLpInstance build_window_subinstance(const ChainLpInstance& extended, std::size_t k,
                                         std::size_t window, double carried_level);

/// Sliding-window controller committing the aggregate of the
/// scenario-optimal first steps.
RolloutResult sliding_window_rollout(const ChainLpInstance& full, std::span<const double> realized,
                                     const ScenarioSource& source, const ControllerConfig& config);

/// Optimal schedule when the realized prices are known in advance.
ChargeSchedule perfect_foresight(const ChainLpInstance& full);

/// Cost of buying the demand hour by hour. Requires d_i <= u_i.
double no_storage_cost(std::span<const double> demand, std::span<const double> prices,
                       std::span<const double> charge_cap);

/// (cost, surplus): cost = sum c_i x_i, surplus = (y_n - a_n) * mean(c).
struct RealizedOutcome {
  double cost = 0.0;
  double final_level = 0.0;
  double surplus = 0.0;
};
RealizedOutcome evaluate_realized(const ChainLpInstance& full, std::span<const double> schedule,
                                  std::span<const double> prices);

}  // namespace storopt
