#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace storopt {

// Mean-reverting Ornstein-Uhlenbeck process with level 0:
//   dX = -theta X dt + sqrt(D) dW
// theta in 1/h, diffusion D in (EUR/kWh)^2 / h, dt in h.
struct OuParams {
  double theta = 0.3331;
  double diffusion = 0.004;
  double dt = 1.0;

  void validate() const;
  double mean_reversion() const;       // e^{-theta dt}
  double step_sd() const;              // sd of the exact one-step innovation
  double stationary_variance() const;  // D / (2 theta)
};

// Samples X_0 = 0, X_1, ..., X_{len-1}.
struct NoisePath {
  std::vector<double> values;
};

using RngStream = std::mt19937_64;

/// Independent stream for (master seed, window index k, scenario index j).
/// The same key always yields the same stream, whatever the evaluation order.
RngStream make_stream(std::uint64_t seed, std::uint64_t window, std::uint64_t scenario);

NoisePath simulate_ou(const OuParams& params, std::size_t length, RngStream& rng);

/// Writes a path of out.size() samples into `out` (out[0] = 0).
void simulate_ou_into(const OuParams& params, std::span<double> out, RngStream& rng);

struct CalibrationResult {
  OuParams params;
  std::size_t used = 0;
  std::vector<std::size_t> skipped;  // trajectory indices with lag-1 autocorrelation outside (0, 1)
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moment-matching estimate per trajectory, averaged over trajectories:
/// theta = -ln(rho1) / dt from the lag-1 autocorrelation, D from the residual
/// variance of X_{t+1} - rho1 X_t rescaled by 2 theta / (1 - e^{-2 theta dt}).
/// With `bias_correct` rho1 gets Kendall's small-sample term (1 + 3 rho1) / n;
/// without it, theta comes out about 15% high on 120-hour trajectories.
CalibrationResult calibrate_ou(const std::vector<std::vector<double>>& trajectories, double dt = 1.0,
                               bool bias_correct = true);

/// m price vectors of a common length stored row-major.
struct PriceScenarioSet {
  std::size_t count = 0;
  std::size_t window = 0;
  std::vector<double> costs;

  std::span<const double> scenario(std::size_t j) const {
    return {costs.data() + j * window, window};
  }
  std::span<double> scenario(std::size_t j) { return {costs.data() + j * window, window}; }
};

/// c^j = base + delta * X^j with X^j drawn from make_stream(seed, window_index, j).
PriceScenarioSet make_price_scenarios(std::span<const double> base, const OuParams& params,
                                      double delta, std::size_t m, std::uint64_t seed,
                                      std::uint64_t window_index);

}  // namespace storopt
