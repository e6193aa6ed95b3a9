#pragma once

#include <cstdint>
#include <vector>

namespace storopt {

// Day-ahead style hourly prices in EUR/kWh: a daily double peak, a weekend
// discount, a slow seasonal drift and AR(1) noise. Stand-in for market data.
struct PriceProfile {
  double mean = 0.040;            // EUR/kWh
  double daily_swing = 0.35;      // relative amplitude of the intraday shape
  double weekend_discount = 0.15; // relative
  double seasonal_swing = 0.10;   // relative, peaks in winter
  double noise_sd = 0.008;        // EUR/kWh, stationary sd of the AR(1) term
  double noise_persistence = 0.8; // AR(1) coefficient per hour
  double start_hour = 4344.0;     // hour of year of the first sample
};

std::vector<double> synth_prices(std::size_t hours, const PriceProfile& profile, std::uint64_t seed);

}  // namespace storopt
