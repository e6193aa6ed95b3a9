#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "storopt/chain_lp.hpp"

namespace storopt {

/// Power-to-Heat household: a charge unit feeding a thermal store that
/// covers the hourly heat demand.
///
/// The annual demand is taken from `annual_heat_demand` when set, otherwise
/// from living_area * specific_demand. Conversion efficiency is fixed at 1.
struct HouseholdSpec {
  std::optional<double> annual_heat_demand = 10741.15;  // kWh/a
  std::optional<double> living_area;                    // m^2
  std::optional<double> specific_demand;                // kWh/(m^2 a)
  double max_charge_power = 15.0;                       // kW
  double capacity_days = 3.0;                           // days of mean daily demand
  double retention = 0.9981;                            // per hour
  double efficiency = 1.0;

  void validate() const;
  double annual_demand() const;
  double capacity() const;  // kWh
};

struct DemandSeries {
  std::vector<double> kwh;  // per hour
};

/// Chain instance for the household: with S_i = q S_{i-1} + x_i - d_i,
/// S_0 = 0 and 0 <= S_i <= C the level bounds become a_i = sum q^{i-j} d_j,
/// b_i = a_i + C, and u_i = P * 1 h. `prices` becomes the cost vector.
/// Throws Infeasible when demand cannot be served.
ChainLpInstance build_instance(const DemandSeries& demand, const HouseholdSpec& spec,
                               std::span<const double> prices);

struct DemandProfile {
  double seasonal_amplitude = 0.6;  // relative swing of the yearly envelope
  double peak_hour = 360.0;         // hour of year with the highest demand
  double start_hour = 4344.0;       // hour of year of the first sample (1 July)
  std::array<double, 24> daily_shape{0.7, 0.65, 0.65, 0.65, 0.7, 0.9, 1.3, 1.5, 1.35, 1.1, 1.0, 0.95,
                                     0.9, 0.9, 0.9, 0.95, 1.05, 1.2, 1.35, 1.35, 1.25, 1.1, 0.9, 0.8};
  double noise = 0.15;  // sigma of the multiplicative lognormal noise
};

/// Synthetic hourly heat demand scaled to sum to annual_total * n / 8760.
DemandSeries synth_demand(std::size_t hours, double annual_total, const DemandProfile& profile,
                          std::uint64_t seed);

}  // namespace storopt
