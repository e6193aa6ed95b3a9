#include "storopt/prices.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace storopt {

std::vector<double> synth_prices(std::size_t hours, const PriceProfile& p, std::uint64_t seed) {
  if (!(p.noise_sd >= 0.0)) throw std::invalid_argument("price noise must be non-negative");
  if (!(p.noise_persistence >= 0.0 && p.noise_persistence < 1.0)) {
    throw std::invalid_argument("price noise persistence must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = p.noise_persistence;
  const double innovation = p.noise_sd * std::sqrt(1.0 - phi * phi);
  std::vector<double> out(hours);
  double ar = p.noise_sd * normal(rng);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t h = 0; h < hours; ++h) {
    const double t = p.start_hour + static_cast<double>(h);
    const double hod = std::fmod(t, 24.0);
    const auto day = static_cast<long>(t / 24.0);
    // morning and evening peaks, night trough
    const double intraday = 0.6 * std::exp(-0.5 * std::pow((hod - 8.5) / 2.0, 2)) +
                            std::exp(-0.5 * std::pow((hod - 18.5) / 2.5, 2)) - 0.45;
    const double weekend = (day % 7 == 5 || day % 7 == 6) ? 1.0 - p.weekend_discount : 1.0;
    const double season = 1.0 + p.seasonal_swing * std::cos(two_pi * (t - 360.0) / 8760.0);
    out[h] = p.mean * season * weekend * (1.0 + p.daily_swing * intraday) + ar;
    ar = phi * ar + innovation * normal(rng);
  }
  return out;
}

}  // namespace storopt
