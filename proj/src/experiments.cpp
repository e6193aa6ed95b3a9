#include "storopt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "storopt/minmax.hpp"
#include "storopt/ou.hpp"

namespace storopt {

namespace {

RolloutResult run_method(const SystemInputs& sys, Method method, const ScenarioSource& source,
                         const ControllerConfig& cc) {
  return method == Method::Median ? sliding_window_rollout(sys.instance, sys.prices, source, cc)
                                  : minmax_rollout(sys.instance, sys.prices, source, cc);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Mean and sample sd, summed in index order.
std::pair<double, double> moments(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

int team(int threads) { return threads > 0 ? threads : 0; }

}  // namespace

SystemInputs make_system(std::vector<double> demand, std::vector<double> prices, const HouseholdSpec& spec) {
  SystemInputs out;
  out.instance = build_instance(DemandSeries{demand}, spec, prices);
  out.demand = std::move(demand);
  out.prices = std::move(prices);
  return out;
}

SystemInputs make_synthetic_system(std::size_t hours, std::uint64_t seed, const HouseholdSpec& spec,
                                   const DemandProfile& demand, const PriceProfile& prices) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::uint64_t sub[2];
  std::uint32_t raw[4];
  seq.generate(raw, raw + 4);
  sub[0] = (static_cast<std::uint64_t>(raw[0]) << 32) | raw[1];
  sub[1] = (static_cast<std::uint64_t>(raw[2]) << 32) | raw[3];
  DemandProfile dp = demand;
  PriceProfile pp = prices;
  pp.start_hour = dp.start_hour;
  return make_system(synth_demand(hours, spec.annual_demand(), dp, sub[0]).kwh, synth_prices(hours, pp, sub[1]),
                     spec);
}

Method parse_method(std::string_view text) {
  if (text == "median") return Method::Median;
  if (text == "minmax") return Method::Minmax;
  throw std::invalid_argument("unknown method: " + std::string(text));
}

std::string method_name(Method m) { return m == Method::Median ? "median" : "minmax"; }

std::vector<double> DeltaSweepConfig::full_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 25; ++i) g.push_back(i / 10.0);
  return g;
}

std::vector<double> DeltaSweepConfig::desk_grid() { return {0.1, 0.5, 1.0, 1.5, 2.0, 2.5}; }

DeltaSweepConfig DeltaSweepConfig::desk() {
  DeltaSweepConfig c;
  c.deltas = desk_grid();
  c.repeats = 25;
  c.realizations = 200;
  c.controller.scenarios = 100;
  return c;
}

void DeltaSweepConfig::validate() const {
  if (deltas.empty()) throw std::invalid_argument("delta grid is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0)) throw std::invalid_argument("delta values must be non-negative");
    if (i > 0 && !(deltas[i] > deltas[i - 1])) throw std::invalid_argument("delta grid must be strictly increasing");
  }
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  controller.validate();
}

std::uint64_t repeat_seed(std::uint64_t master, std::uint64_t repeat) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(repeat), static_cast<std::uint32_t>(repeat >> 32), 0x7e9u};
  std::uint32_t raw[2];
  seq.generate(raw, raw + 2);
  return (static_cast<std::uint64_t>(raw[0]) << 32) | raw[1];
}

SweepReport run_delta_sweep(const SystemInputs& system, const DeltaSweepConfig& config) {
  config.validate();
  SweepReport report;
  report.perfect_foresight = perfect_foresight(system.instance).objective;
  report.no_storage = no_storage_cost(system.demand, system.prices, system.instance.charge_cap);

  const std::size_t nm = config.methods.size();
  const std::size_t nd = config.deltas.size();
  const std::size_t nr = config.repeats;
  const std::size_t jobs = nm * nd * nr;
  struct Outcome {
    double cost = 0.0, surplus = 0.0, runtime = 0.0, gap = 0.0;
    bool ok = false, sandwich = true, feasible = true;
    std::string error;
  };
  std::vector<Outcome> outcomes(jobs);
  const double pf = report.perfect_foresight;
  const double ns = report.no_storage;

  // Cells run in parallel; each rollout itself stays serial so thread count
  // cannot leak into any reduction.
#pragma omp parallel for schedule(dynamic, 1) num_threads(team(config.threads)) if (config.threads != 1)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(jobs); ++idx) {
    const auto u = static_cast<std::size_t>(idx);
    const std::size_t mi = u / (nd * nr);
    const std::size_t di = (u / nr) % nd;
    const std::size_t ri = u % nr;
    Outcome& o = outcomes[u];
    ControllerConfig cc = config.controller;
    cc.delta = config.deltas[di];
    cc.seed = repeat_seed(config.seed, ri);
    cc.threads = 1;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const OuScenarioSource source(cc.noise, cc.delta, cc.scenarios, cc.seed);
      const RolloutResult r = run_method(system, config.methods[mi], source, cc);
      o.cost = r.realized_cost;
      o.surplus = r.surplus_value;
      const double slack = 1e-9 * std::max(1.0, std::abs(pf));
      o.sandwich = pf <= r.realized_cost + slack && r.realized_cost <= ns + 1e-9 * std::max(1.0, std::abs(ns));
      o.feasible = schedule_feasible(system.instance, r.schedule);
      for (const StepDiagnostics& s : r.steps) o.gap = std::max(o.gap, s.gap);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    o.runtime = seconds_since(t0);
  }

  for (std::size_t mi = 0; mi < nm; ++mi) {
    for (std::size_t di = 0; di < nd; ++di) {
      SweepRow row;
      row.method = config.methods[mi];
      row.delta = config.deltas[di];
      std::vector<double> costs;
      double surplus = 0.0;
      for (std::size_t ri = 0; ri < nr; ++ri) {
        const Outcome& o = outcomes[(mi * nd + di) * nr + ri];
        row.runtime_s += o.runtime;
        if (!o.ok) {
          if (row.error.empty()) row.error = "repeat " + std::to_string(ri) + ": " + o.error;
          continue;
        }
        costs.push_back(o.cost);
        surplus += o.surplus;
        if (!o.sandwich) ++row.sandwich_violations;
        if (!o.feasible) ++row.infeasible_runs;
        row.max_gap = std::max(row.max_gap, o.gap);
      }
      row.runs = costs.size();
      std::tie(row.mean_cost, row.std_cost) = moments(costs);
      row.mean_surplus = costs.empty() ? 0.0 : surplus / static_cast<double>(costs.size());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<SensitivityRow> run_sensitivity(const SystemInputs& system, Method method,
                                            const DeltaSweepConfig& config) {
  config.validate();
  if (config.realizations < 2) throw std::invalid_argument("sensitivity needs at least two realizations");
  const std::size_t n = system.instance.size();
  const std::size_t nd = config.deltas.size();
  const std::size_t nreal = config.realizations;
  // Realization paths are keyed by a window index no rollout uses.
  const std::uint64_t path_window = ~std::uint64_t{0};
  const double pf = perfect_foresight(system.instance).objective;
  const double ns = no_storage_cost(system.demand, system.prices, system.instance.charge_cap);

  std::vector<SensitivityRow> rows(nd);
  std::vector<std::string> errors(nd);
#pragma omp parallel for schedule(dynamic, 1) num_threads(team(config.threads)) if (config.threads != 1)
  for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(nd); ++d) {
    const auto di = static_cast<std::size_t>(d);
    const auto t0 = std::chrono::steady_clock::now();
    SensitivityRow& row = rows[di];
    row.method = method;
    row.delta = config.deltas[di];
    try {
      ControllerConfig cc = config.controller;
      cc.delta = row.delta;
      cc.seed = repeat_seed(config.seed, 0);
      cc.threads = 1;
      const OuScenarioSource source(cc.noise, cc.delta, cc.scenarios, cc.seed);
      const RolloutResult r = run_method(system, method, source, cc);
      row.rollout_cost = r.realized_cost;
      row.feasible = schedule_feasible(system.instance, r.schedule);
      for (const StepDiagnostics& s : r.steps) row.max_gap = std::max(row.max_gap, s.gap);
      const double slack = 1e-9 * std::max(1.0, std::abs(pf));
      row.sandwiched = pf <= r.realized_cost + slack && r.realized_cost <= ns + 1e-9 * std::max(1.0, std::abs(ns));
      std::vector<double> costs(nreal);
      std::vector<double> noise(n);
      for (std::size_t s = 0; s < nreal; ++s) {
        RngStream rng = make_stream(config.seed, path_window, s);
        simulate_ou_into(cc.noise, noise, rng);
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += (system.prices[i] + row.delta * noise[i]) * r.schedule[i];
        costs[s] = c;
      }
      row.realizations = nreal;
      std::tie(row.mean_cost, row.std_cost) = moments(costs);
    } catch (const std::exception& e) {
      errors[di] = e.what();
    }
    row.runtime_s = seconds_since(t0);
  }
  for (std::size_t di = 0; di < nd; ++di) {
    if (!errors[di].empty()) {
      throw std::runtime_error("sensitivity at delta " + num(config.deltas[di]) + " failed: " + errors[di]);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const SweepReport& report) {
  os << "method,delta,runs,mean_cost_eur,std_cost_eur,mean_surplus_eur,perfect_foresight_eur,"
        "no_storage_eur,sandwich_violations,infeasible_runs,max_gap,error\n";
  for (const SweepRow& r : report.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << method_name(r.method) << ',' << num(r.delta) << ',' << r.runs << ',' << num(r.mean_cost) << ','
       << num(r.std_cost) << ',' << num(r.mean_surplus) << ',' << num(report.perfect_foresight) << ','
       << num(report.no_storage) << ',' << r.sandwich_violations << ',' << r.infeasible_runs << ','
       << num(r.max_gap) << ',';
    if (!err.empty()) os << '"' << err << '"';
    os << '\n';
  }
}

void write_sweep_json(std::ostream& os, const SweepReport& report) {
  nlohmann::ordered_json j;
  j["perfect_foresight_eur"] = report.perfect_foresight;
  j["no_storage_eur"] = report.no_storage;
  j["rows"] = nlohmann::ordered_json::array();
  for (const SweepRow& r : report.rows) {
    nlohmann::ordered_json row;
    row["method"] = method_name(r.method);
    row["delta"] = r.delta;
    row["runs"] = r.runs;
    row["mean_cost_eur"] = r.mean_cost;
    row["std_cost_eur"] = r.std_cost;
    row["mean_surplus_eur"] = r.mean_surplus;
    row["sandwich_violations"] = r.sandwich_violations;
    row["infeasible_runs"] = r.infeasible_runs;
    row["max_gap"] = r.max_gap;
    if (!r.error.empty()) row["error"] = r.error;
    j["rows"].push_back(std::move(row));
  }
  os << j.dump(2) << '\n';
}

void write_sweep_timings(std::ostream& os, const SweepReport& report) {
  os << "method,delta,runs,runtime_s\n";
  for (const SweepRow& r : report.rows) {
    os << method_name(r.method) << ',' << num(r.delta) << ',' << r.runs << ',' << num(r.runtime_s) << '\n';
  }
}

void write_sensitivity_csv(std::ostream& os, const std::vector<SensitivityRow>& rows) {
  os << "method,delta,realizations,mean_cost_eur,std_cost_eur,rollout_cost_eur,feasible,sandwiched,runtime_s\n";
  for (const SensitivityRow& r : rows) {
    os << method_name(r.method) << ',' << num(r.delta) << ',' << r.realizations << ',' << num(r.mean_cost)
       << ',' << num(r.std_cost) << ',' << num(r.rollout_cost) << ',' << (r.feasible ? 1 : 0) << ','
       << (r.sandwiched ? 1 : 0) << ',' << num(r.runtime_s) << '\n';
  }
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal samples of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const auto [mx, sx] = moments(rx);
  const auto [my, sy] = moments(ry);
  if (sx == 0.0 || sy == 0.0) return 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - mx) * (ry[i] - my);
  cov /= static_cast<double>(rx.size() - 1);
  return cov / (sx * sy);
}

}  // namespace storopt
