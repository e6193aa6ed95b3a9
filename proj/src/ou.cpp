#include "storopt/ou.hpp"

#include <cmath>
#include <stdexcept>

namespace storopt {

void OuParams::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("OU drift must be positive");
  if (!(diffusion >= 0.0) || !std::isfinite(diffusion)) {
    throw std::invalid_argument("OU diffusion must be non-negative");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("OU time step must be positive");
}

double OuParams::mean_reversion() const { return std::exp(-theta * dt); }

double OuParams::step_sd() const {
  return std::sqrt(diffusion / (2.0 * theta) * -std::expm1(-2.0 * theta * dt));
}

double OuParams::stationary_variance() const { return diffusion / (2.0 * theta); }

RngStream make_stream(std::uint64_t seed, std::uint64_t window, std::uint64_t scenario) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(window), static_cast<std::uint32_t>(window >> 32),
                    static_cast<std::uint32_t>(scenario), static_cast<std::uint32_t>(scenario >> 32)};
  return RngStream(seq);
}

void simulate_ou_into(const OuParams& params, std::span<double> out, RngStream& rng) {
  params.validate();
  if (out.empty()) return;
  const double mu = params.mean_reversion();
  const double sd = params.step_sd();
  out[0] = 0.0;
  if (sd == 0.0) {
    for (double& v : out) v = 0.0;
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  double x = 0.0;
  for (std::size_t t = 1; t < out.size(); ++t) {
    x = mu * x + sd * normal(rng);
    out[t] = x;
  }
}

NoisePath simulate_ou(const OuParams& params, std::size_t length, RngStream& rng) {
  NoisePath path;
  path.values.resize(length);
  simulate_ou_into(params, path.values, rng);
  return path;
}

CalibrationResult calibrate_ou(const std::vector<std::vector<double>>& trajectories, double dt,
                               bool bias_correct) {
  if (trajectories.empty()) throw CalibrationError("no forecast-error trajectories given");
  CalibrationResult result;
  double theta_sum = 0.0;
  double diffusion_sum = 0.0;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const std::vector<double>& x = trajectories[k];
    if (x.size() < 3) throw CalibrationError("forecast-error trajectory shorter than 3 samples");
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = x[t] - mean;
      den += d * d;
      if (t + 1 < n) num += d * (x[t + 1] - mean);
    }
    double rho = num / den;
    if (bias_correct && rho > 0.0) rho += (1.0 + 3.0 * rho) / static_cast<double>(n);
    if (!(rho > 0.0 && rho < 1.0)) {
      result.skipped.push_back(k);
      continue;
    }
    const double theta = -std::log(rho) / dt;

    double rmean = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) rmean += x[t + 1] - rho * x[t];
    rmean /= static_cast<double>(n - 1);
    double rvar = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      const double r = x[t + 1] - rho * x[t] - rmean;
      rvar += r * r;
    }
    rvar /= static_cast<double>(n - 2);

    theta_sum += theta;
    diffusion_sum += rvar * 2.0 * theta / -std::expm1(-2.0 * theta * dt);
    ++result.used;
  }
  if (result.used == 0) throw CalibrationError("every trajectory was degenerate; cannot calibrate");
  result.params.theta = theta_sum / static_cast<double>(result.used);
  result.params.diffusion = diffusion_sum / static_cast<double>(result.used);
  result.params.dt = dt;
  return result;
}

PriceScenarioSet make_price_scenarios(std::span<const double> base, const OuParams& params,
                                      double delta, std::size_t m, std::uint64_t seed,
                                      std::uint64_t window_index) {
  if (m == 0) throw std::invalid_argument("scenario count must be at least 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("perturbation scale must be non-negative");
  params.validate();
  PriceScenarioSet set;
  set.count = m;
  set.window = base.size();
  set.costs.resize(m * base.size());
  for (std::size_t j = 0; j < m; ++j) {
    std::span<double> row = set.scenario(j);
    if (delta == 0.0 || params.diffusion == 0.0) {
      std::copy(base.begin(), base.end(), row.begin());
      continue;
    }
    RngStream rng = make_stream(seed, window_index, j);
    simulate_ou_into(params, row, rng);
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = base[t] + delta * row[t];
  }
  return set;
}

}  // namespace storopt
