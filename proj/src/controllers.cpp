#include "storopt/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rollout_scaffold.hpp"
#include "storopt/kernels.hpp"

namespace storopt {

Measure Measure::quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  return Measure(Kind::Quantile, p);
}

Measure Measure::parse(std::string_view text) {
  if (text == "median") return median();
  if (text == "mean") return mean();
  constexpr std::string_view prefix = "quantile:";
  if (text.starts_with(prefix)) {
    const std::string rest(text.substr(prefix.size()));
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != rest.size() || rest.empty()) throw std::invalid_argument("bad quantile level: " + rest);
    return quantile(p);
  }
  throw std::invalid_argument("unknown measure: " + std::string(text));
}

std::string Measure::name() const {
  switch (kind_) {
    case Kind::Median:
      return "median";
    case Kind::Mean:
      return "mean";
    case Kind::Quantile: {
      std::ostringstream os;
      os << "quantile:" << p_;
      return os.str();
    }
  }
  return "median";
}

double Measure::apply(std::span<double> values) const {
  if (values.empty()) throw std::invalid_argument("measure of an empty sample");
  if (kind_ == Kind::Mean) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  const double h = static_cast<double>(values.size() - 1) * p_;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 == values.size()) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

void ControllerConfig::validate() const {
  if (window < 1) throw std::invalid_argument("window must be at least one hour");
  if (scenarios < 1) throw std::invalid_argument("scenario count must be at least 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("perturbation scale must be non-negative");
  if (!(gap_tol > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("iteration cap must be at least 1");
  noise.validate();
}

OuScenarioSource::OuScenarioSource(OuParams params, double delta, std::size_t count,
                                   std::uint64_t seed, std::vector<double> forecast_base)
    : params_(params), delta_(delta), count_(count), seed_(seed),
      forecast_base_(std::move(forecast_base)) {
  params_.validate();
  if (count_ == 0) throw std::invalid_argument("scenario count must be at least 1");
  if (!(delta_ >= 0.0)) throw std::invalid_argument("perturbation scale must be non-negative");
}

void OuScenarioSource::fill(std::size_t k, std::size_t j, std::span<const double> realized,
                            std::span<double> out) const {
  std::span<const double> base = realized;
  if (!forecast_base_.empty()) {
    if (k + out.size() > forecast_base_.size()) {
      throw std::out_of_range("forecast base shorter than the extended horizon");
    }
    base = std::span<const double>(forecast_base_.data() + k, out.size());
  }
  if (delta_ == 0.0 || params_.diffusion == 0.0) {
    std::copy(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(out.size()), out.begin());
    return;
  }
  RngStream rng = make_stream(seed_, k, j);
  simulate_ou_into(params_, out, rng);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = base[t] + delta_ * out[t];
}

ChainLpInstance extend_horizon(const ChainLpInstance& full, std::span<const double> realized,
                               std::size_t extra, std::size_t period) {
  check_structure(full);
  const std::size_t n = full.size();
  if (realized.size() != n) throw InvalidInstance("realized prices do not match the horizon");
  ChainLpInstance out = full;
  out.costs.assign(realized.begin(), realized.end());
  if (extra == 0 || n == 0) return out;
  const std::size_t p = std::min(period, n);
  const double q = full.retention;
  auto increment = [&](std::size_t i) { return full.lower[i] - (i > 0 ? q * full.lower[i - 1] : 0.0); };
  out.costs.reserve(n + extra);
  out.lower.reserve(n + extra);
  out.upper.reserve(n + extra);
  out.charge_cap.reserve(n + extra);
  for (std::size_t t = n; t < n + extra; ++t) {
    const std::size_t src = n - p + (t - n) % p;
    const double lower = q * out.lower.back() + increment(src);
    out.costs.push_back(realized[src]);
    out.charge_cap.push_back(full.charge_cap[src]);
    out.lower.push_back(lower);
    out.upper.push_back(lower + (full.upper[src] - full.lower[src]));
  }
  return out;
}

ChainLpInstance build_window_subinstance(const ChainLpInstance& extended, std::size_t k,
                                         std::size_t window, double carried_level) {
  if (k < 1 || k > extended.size()) throw std::out_of_range("window start outside the horizon");
  if (window < 1 || k - 1 + window > extended.size()) {
    throw std::out_of_range("window runs past the extended horizon");
  }
  if (!(carried_level >= 0.0)) throw StateCorruption("negative carried storage level");
  ChainLpInstance sub;
  sub.retention = extended.retention;
  sub.costs.resize(window);
  sub.lower.resize(window);
  sub.upper.resize(window);
  sub.charge_cap.resize(window);
  double decayed = carried_level;
  for (std::size_t t = 0; t < window; ++t) {
    const std::size_t i = k - 1 + t;
    decayed *= extended.retention;
    sub.costs[t] = extended.costs[i];
    sub.charge_cap[t] = extended.charge_cap[i];
    sub.lower[t] = std::max(0.0, extended.lower[i] - decayed);
    sub.upper[t] = extended.upper[i] - decayed;
    if (sub.upper[t] < -constraint_slack(extended.upper[i])) {
      std::ostringstream os;
      os << "carried level exceeds the upper bound at step " << i + 1;
      throw StateCorruption(os.str());
    }
    sub.upper[t] = std::max(sub.upper[t], 0.0);
  }
  return sub;
}

RolloutResult sliding_window_rollout(const ChainLpInstance& full, std::span<const double> realized,
                                     const ScenarioSource& source, const ControllerConfig& config) {
  std::vector<double> first(source.count());
  return detail::run_rollout(
      full, realized, config,
      [&](std::size_t k, const ChainLpInstance& window, std::span<const double> realized_window,
          StepDiagnostics& diag) {
        if (config.threads == 1) {
          kernels::scenario_first_steps_serial(window, source, k, realized_window, first);
        } else {
          kernels::scenario_first_steps_omp(window, source, k, realized_window, first, config.threads);
        }
        const auto [lo, hi] = std::minmax_element(first.begin(), first.end());
        diag.spread_lo = *lo;
        diag.spread_hi = *hi;
        return config.measure.apply(first);
      });
}

ChargeSchedule perfect_foresight(const ChainLpInstance& full) { return solve_chain(full); }

double no_storage_cost(std::span<const double> demand, std::span<const double> prices,
                       std::span<const double> charge_cap) {
  if (demand.size() != prices.size() || demand.size() != charge_cap.size()) {
    throw std::invalid_argument("demand, prices and caps differ in length");
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    if (demand[i] > charge_cap[i] + constraint_slack(charge_cap[i])) {
      std::ostringstream os;
      os << "demand exceeds the charge cap at step " << i + 1 << "; no-storage system cannot serve it";
      throw std::invalid_argument(os.str());
    }
    cost += prices[i] * demand[i];
  }
  return cost;
}

RealizedOutcome evaluate_realized(const ChainLpInstance& full, std::span<const double> schedule,
                                  std::span<const double> prices) {
  if (schedule.size() != full.size() || prices.size() != full.size()) {
    throw InvalidInstance("schedule or prices do not match the horizon");
  }
  RealizedOutcome out;
  double mean_price = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out.cost += prices[i] * schedule[i];
    mean_price += prices[i];
  }
  if (schedule.empty()) return out;
  mean_price /= static_cast<double>(prices.size());
  const std::vector<double> y = level_trajectory(full, schedule);
  out.final_level = std::max(0.0, y.back() - full.lower.back());
  out.surplus = out.final_level * mean_price;
  return out;
}

}  // namespace storopt
