#include "storopt/pth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace storopt {

void HouseholdSpec::validate() const {
  if (!annual_heat_demand && !(living_area && specific_demand)) {
    throw std::invalid_argument("household needs an annual demand or living area and specific demand");
  }
  if (annual_heat_demand && living_area && specific_demand &&
      std::abs(*annual_heat_demand - *living_area * *specific_demand) > 1e-9 * *annual_heat_demand) {
    throw std::invalid_argument("annual heat demand disagrees with living area times specific demand");
  }
  if (!(annual_demand() > 0.0)) throw std::invalid_argument("annual heat demand must be positive");
  if (!(max_charge_power >= 0.0)) throw std::invalid_argument("charge power must be non-negative");
  if (!(capacity_days > 0.0)) throw std::invalid_argument("storage capacity must be positive");
  if (!(retention > 0.0 && retention <= 1.0)) throw std::invalid_argument("retention must lie in (0, 1]");
  if (efficiency != 1.0) throw std::invalid_argument("only unit conversion efficiency is modelled");
}

double HouseholdSpec::annual_demand() const {
  if (annual_heat_demand) return *annual_heat_demand;
  return living_area.value_or(0.0) * specific_demand.value_or(0.0);
}

double HouseholdSpec::capacity() const { return capacity_days * annual_demand() / 365.0; }

ChainLpInstance build_instance(const DemandSeries& demand, const HouseholdSpec& spec,
                               std::span<const double> prices) {
  spec.validate();
  const std::size_t n = demand.kwh.size();
  if (prices.size() != n) throw InvalidInstance("price and demand series differ in length");
  ChainLpInstance inst;
  inst.retention = spec.retention;
  inst.costs.assign(prices.begin(), prices.end());
  inst.lower.resize(n);
  inst.upper.resize(n);
  inst.charge_cap.assign(n, spec.max_charge_power);
  const double cap = spec.capacity();
  double discounted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(demand.kwh[i] >= 0.0)) throw InvalidInstance("heat demand must be non-negative");
    discounted = spec.retention * discounted + demand.kwh[i];
    inst.lower[i] = discounted;
    inst.upper[i] = discounted + cap;
  }
  const FeasibilityReport rep = check_feasible(inst);
  if (!rep.feasible) {
    throw Infeasible(rep.first_violation, "heat demand exceeds what the charge unit can deliver");
  }
  return inst;
}

DemandSeries synth_demand(std::size_t hours, double annual_total, const DemandProfile& profile,
                          std::uint64_t seed) {
  if (hours < 24) throw std::invalid_argument("synthetic demand needs at least one day");
  if (!(annual_total > 0.0)) throw std::invalid_argument("annual demand must be positive");
  if (!(profile.seasonal_amplitude >= 0.0 && profile.seasonal_amplitude < 1.0)) {
    throw std::invalid_argument("seasonal amplitude must lie in [0, 1)");
  }
  if (!(profile.noise >= 0.0)) throw std::invalid_argument("demand noise must be non-negative");
  for (double v : profile.daily_shape) {
    if (!(v > 0.0)) throw std::invalid_argument("daily shape entries must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = profile.noise;
  DemandSeries out;
  out.kwh.resize(hours);
  double total = 0.0;
  for (std::size_t h = 0; h < hours; ++h) {
    const double hour_of_year = profile.start_hour + static_cast<double>(h);
    const double season =
        1.0 + profile.seasonal_amplitude *
                  std::cos(2.0 * std::numbers::pi * (hour_of_year - profile.peak_hour) / 8760.0);
    const double shape = profile.daily_shape[static_cast<std::size_t>(hour_of_year) % 24];
    const double noise = sigma > 0.0 ? std::exp(sigma * normal(rng) - 0.5 * sigma * sigma) : 1.0;
    out.kwh[h] = std::max(0.0, season * shape * noise);
    total += out.kwh[h];
  }
  const double target = annual_total * static_cast<double>(hours) / 8760.0;
  for (double& v : out.kwh) v *= target / total;
  return out;
}

}  // namespace storopt
