#include "storopt/validation.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "storopt/controllers.hpp"
#include "storopt/experiments.hpp"
#include "storopt/minmax.hpp"
#include "storopt/ou.hpp"
#include "storopt/reference.hpp"

namespace storopt::validation {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

// What the criteria see of each other's runs.
struct Audit {
  std::size_t schedules = 0;
  std::size_t infeasible = 0;
  std::string first_infeasible;

  std::size_t sandwich_runs = 0;
  std::size_t sandwich_violations = 0;
  std::vector<std::string> violation_notes;

  std::size_t minmax_runs = 0;
  double max_gap = 0.0;

  void schedule(bool feasible, const std::string& where, std::size_t count = 1, std::size_t failed = 0) {
    schedules += count;
    const std::size_t bad = feasible ? failed : std::max<std::size_t>(failed, 1);
    infeasible += bad;
    if (bad > 0 && first_infeasible.empty()) first_infeasible = where;
  }

  void sandwich(std::size_t runs, std::size_t violations, const std::string& where) {
    sandwich_runs += runs;
    sandwich_violations += violations;
    if (violations > 0) violation_notes.push_back(where + ": " + std::to_string(violations) + "/" + std::to_string(runs));
  }

  void gap(double g) {
    ++minmax_runs;
    max_gap = std::max(max_gap, g);
  }
};

struct Runner {
  const ValidationOptions& opt;
  Audit audit;

  void log(const std::string& line) const {
    if (opt.log) *opt.log << line << std::endl;
  }

  void artifact(const std::string& name, const std::string& text) const {
    if (opt.artifacts_dir.empty()) return;
    std::filesystem::create_directories(opt.artifacts_dir);
    std::ofstream out(std::filesystem::path(opt.artifacts_dir) / name);
    out << text;
  }

  static bool sandwiched(double cost, double pf, double ns) {
    return pf <= cost + 1e-9 * std::max(1.0, std::abs(pf)) && cost <= ns + 1e-9 * std::max(1.0, std::abs(ns));
  }

  static bool demand_within_cap(const SystemInputs& sys) {
    for (std::size_t i = 0; i < sys.demand.size(); ++i) {
      if (sys.demand[i] > sys.instance.charge_cap[i]) return false;
    }
    return true;
  }

  CriterionResult oracle_equivalence() {
    CriterionResult r;
    r.id = 1;
    r.name = "oracle equivalence";
    const auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed ^ 0x01);
    const double qs[] = {1.0, 0.99, 0.5};
    double worst = 0.0;
    std::size_t bad = 0;
    for (int k = 0; k < 500; ++k) {
      const std::size_t n = 2 + rng() % 7;
      const ChainLpInstance inst = random_instance(rng, n, qs[k % 3]);
      const ChargeSchedule fast = solve_chain(inst);
      const ChargeSchedule slow = solve_reference(inst, 1e-8);
      audit.schedule(schedule_feasible(inst, fast.x), "oracle instance " + std::to_string(k));
      const double diff = std::abs(fast.objective - slow.objective);
      worst = std::max(worst, diff);
      if (!(diff <= 1e-5)) ++bad;
    }
    r.seconds = since(t0);
    r.pass = bad == 0 && r.seconds < 60.0;
    r.detail = "500 instances, max |diff| " + fmt(worst, 3) + " EUR, " + std::to_string(bad) + " over 1e-5, " +
               fmt(r.seconds, 3) + " s of 60";
    return r;
  }

  CriterionResult collapse_identity() {
    CriterionResult r;
    r.id = 3;
    r.name = "collapse identity";
    const auto t0 = Clock::now();
    std::mt19937_64 rng(opt.seed ^ 0x03);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const SystemInputs sys = make_synthetic_system(168, rng());
      const double pf = perfect_foresight(sys.instance).objective;
      const double ns = no_storage_cost(sys.demand, sys.prices, sys.instance.charge_cap);
      ControllerConfig cc;
      cc.window = 168;
      cc.scenarios = 1;
      cc.delta = 0.0;
      cc.seed = k;
      cc.threads = opt.threads;
      const OuScenarioSource src(cc.noise, 0.0, 1, cc.seed);
      for (Method m : {Method::Median, Method::Minmax}) {
        const RolloutResult out = m == Method::Median ? sliding_window_rollout(sys.instance, sys.prices, src, cc)
                                                      : minmax_rollout(sys.instance, sys.prices, src, cc);
        const std::string where = "collapse " + method_name(m) + " instance " + std::to_string(k);
        audit.schedule(schedule_feasible(sys.instance, out.schedule), where);
        if (demand_within_cap(sys)) audit.sandwich(1, sandwiched(out.realized_cost, pf, ns) ? 0 : 1, where);
        if (m == Method::Minmax) {
          for (const auto& s : out.steps) audit.gap(s.gap);
        }
        worst = std::max(worst, std::abs(out.realized_cost - pf) / std::max(1.0, std::abs(pf)));
      }
    }
    r.seconds = since(t0);
    r.pass = worst <= 1e-6;
    r.detail = "20 x 168 h, median and min-max, max relative deviation " + fmt(worst, 3);
    return r;
  }

  CriterionResult ou_roundtrip() {
    CriterionResult r;
    r.id = 5;
    r.name = "OU calibration roundtrip";
    const auto t0 = Clock::now();
    const OuParams truth{0.3331, 0.004, 1.0};
    std::vector<std::vector<double>> paths;
    for (std::uint64_t p = 0; p < 50; ++p) {
      RngStream rng = make_stream(opt.seed, 5, p);
      paths.push_back(simulate_ou(truth, 3480, rng).values);
    }
    const CalibrationResult fit = calibrate_ou(paths);
    const double eth = std::abs(fit.params.theta / truth.theta - 1.0);
    const double ed = std::abs(fit.params.diffusion / truth.diffusion - 1.0);

    // stationary variance: 20 paths, burn-in 50 / theta, 1e4 samples each
    const auto burn = static_cast<std::size_t>(std::ceil(50.0 / truth.theta));
    double ss = 0.0;
    std::size_t count = 0;
    for (std::uint64_t p = 0; p < 20; ++p) {
      RngStream rng = make_stream(opt.seed, 55, p);
      const auto v = simulate_ou(truth, burn + 10000, rng).values;
      for (std::size_t t = burn; t < v.size(); ++t) {
        ss += v[t] * v[t];
        ++count;
      }
    }
    const double var = ss / static_cast<double>(count);
    const double ev = std::abs(var / truth.stationary_variance() - 1.0);
    r.seconds = since(t0);
    r.pass = eth <= 0.10 && ed <= 0.15 && ev <= 0.05;
    r.detail = "theta " + fmt(fit.params.theta) + " (" + fmt(100 * eth, 2) + "% of 10%), D " +
               fmt(fit.params.diffusion) + " (" + fmt(100 * ed, 2) + "% of 15%), variance " + fmt(var) + " vs " +
               fmt(truth.stationary_variance()) + " (" + fmt(100 * ev, 2) + "% of 5%, " + std::to_string(count) +
               " samples)";
    return r;
  }

  // Random part of criterion 6; the gap audit is folded in at the end.
  std::string minmax_cases(bool& ok) {
    std::mt19937_64 rng(opt.seed ^ 0x06);
    std::uniform_real_distribution<double> price(-0.5, 2.0);
    const double qs[] = {1.0, 0.99, 0.5};
    double worst_ref = 0.0;
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = 2 + rng() % 5;
      const std::size_t m = 1 + rng() % 5;
      const ChainLpInstance inst = random_instance(rng, n, qs[k % 3]);
      PriceScenarioSet s{m, n, std::vector<double>(m * n)};
      for (double& c : s.costs) c = price(rng);
      const MinmaxResult mm = minmax_first_step(inst, s);
      audit.schedule(schedule_feasible(inst, mm.x), "min-max case " + std::to_string(k));
      audit.gap(mm.gap);
      worst_ref = std::max(worst_ref, std::abs(mm.primal - minmax_reference(inst, s)));
    }
    double worst_one = 0.0;
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = 2 + rng() % 60;
      const ChainLpInstance inst = random_instance(rng, n, qs[k % 3]);
      PriceScenarioSet s{1, n, std::vector<double>(n)};
      for (double& c : s.costs) c = price(rng);
      const MinmaxResult mm = minmax_first_step(inst, s);
      const ChargeSchedule lp = solve_chain(inst, s.scenario(0));
      worst_one = std::max({worst_one, std::abs(mm.first_step - lp.x[0]),
                            std::abs(mm.primal - lp.objective) / std::max(1.0, std::abs(lp.objective))});
    }
    ok = worst_ref <= 1e-5 && worst_one <= 1e-9;
    return "50 cases vs reference max |diff| " + fmt(worst_ref, 3) + " (1e-5); m = 1 max deviation " +
           fmt(worst_one, 3) + " (1e-9)";
  }

  SystemInputs desk_system() const { return make_synthetic_system(336, opt.seed); }

  void audit_sweep(const SweepReport& rep, const SystemInputs& sys, const std::string& tag) {
    for (const SweepRow& row : rep.rows) {
      const std::string where = tag + " " + method_name(row.method) + " delta " + fmt(row.delta, 3);
      audit.schedule(row.infeasible_runs == 0, where, row.runs, row.infeasible_runs);
      if (demand_within_cap(sys)) audit.sandwich(row.runs, row.sandwich_violations, where);
      if (row.method == Method::Minmax) audit.gap(row.max_gap);
    }
  }

  static std::string report_bytes(const SweepReport& rep) {
    std::ostringstream csv, json;
    write_sweep_csv(csv, rep);
    write_sweep_json(json, rep);
    return csv.str() + '\x1e' + json.str();
  }

  CriterionResult determinism() {
    CriterionResult r;
    r.id = 10;
    r.name = "determinism across thread counts";
    const auto t0 = Clock::now();
    const SystemInputs sys = make_synthetic_system(168, opt.seed ^ 0x10);
    DeltaSweepConfig cfg;
    cfg.deltas = {0.1, 1.0, 2.5};
    cfg.repeats = 4;
    cfg.seed = opt.seed;
    cfg.controller.window = 48;
    cfg.controller.scenarios = 20;
    cfg.threads = 1;
    const SweepReport serial = run_delta_sweep(sys, cfg);
    const int many = std::max(4, omp_get_max_threads());
    cfg.threads = many;
    const SweepReport parallel = run_delta_sweep(sys, cfg);
    audit_sweep(serial, sys, "determinism sweep");
    const std::string a = report_bytes(serial);
    const std::string b = report_bytes(parallel);
    r.seconds = since(t0);
    r.pass = a == b;
    r.detail = "168 h sweep, 3 deltas x 4 repeats x 2 methods, 1 vs " + std::to_string(many) + " threads: " +
               (r.pass ? "identical " + std::to_string(a.size()) + " bytes" : "reports differ");
    return r;
  }

  CriterionResult trend(const SweepReport& rep) {
    CriterionResult r;
    r.id = 7;
    r.name = "trend reproduction";
    std::vector<double> d, median_cost;
    double med_lo = 1e300, med_hi = -1e300, mm_lo = 1e300, mm_hi = -1e300;
    std::string errors;
    for (const SweepRow& row : rep.rows) {
      if (!row.error.empty()) errors += method_name(row.method) + " " + fmt(row.delta, 3) + ": " + row.error + "; ";
      if (row.method == Method::Median) {
        d.push_back(row.delta);
        median_cost.push_back(row.mean_cost);
      }
      if (row.delta > 1.5 + 1e-12) continue;
      if (row.method == Method::Median) {
        med_lo = std::min(med_lo, row.mean_cost);
        med_hi = std::max(med_hi, row.mean_cost);
      } else {
        mm_lo = std::min(mm_lo, row.mean_cost);
        mm_hi = std::max(mm_hi, row.mean_cost);
      }
    }
    const double rho = spearman(d, median_cost);
    const double med_spread = med_hi - med_lo;
    const double mm_spread = mm_hi - mm_lo;
    r.pass = errors.empty() && rho >= 0.9 && mm_spread < med_spread;
    r.detail = "median Spearman " + fmt(rho, 3) + " (>= 0.9); spread over delta <= 1.5: min-max " +
               fmt(mm_spread) + " EUR vs median " + fmt(med_spread) + " EUR" + (errors.empty() ? "" : "; " + errors);
    return r;
  }

  CriterionResult sensitivity(const SystemInputs& sys) {
    CriterionResult r;
    r.id = 8;
    r.name = "sensitivity shape";
    const auto t0 = Clock::now();
    DeltaSweepConfig cfg = DeltaSweepConfig::desk();
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    bool ok = true;
    std::string detail;
    for (Method m : {Method::Median, Method::Minmax}) {
      log("  sensitivity " + method_name(m));
      const auto rows = run_sensitivity(sys, m, cfg);
      std::ostringstream csv;
      write_sensitivity_csv(csv, rows);
      artifact("sensitivity_" + method_name(m) + ".csv", csv.str());
      std::size_t rises = 0;
      for (std::size_t i = 1; i < rows.size(); ++i) rises += rows[i].std_cost > rows[i - 1].std_cost;
      ok = ok && rises + 1 == rows.size();
      detail += (detail.empty() ? "" : "; ") + method_name(m) + " sd";
      for (const auto& row : rows) {
        detail += " " + fmt(row.std_cost, 3);
        const std::string where = "sensitivity " + method_name(m) + " delta " + fmt(row.delta, 3);
        audit.schedule(row.feasible, where);
        if (demand_within_cap(sys)) audit.sandwich(1, row.sandwiched ? 0 : 1, where);
        if (m == Method::Minmax) audit.gap(row.max_gap);
      }
      detail += " (" + std::to_string(rises) + "/" + std::to_string(rows.size() - 1) + " rising)";
    }
    r.seconds = since(t0);
    r.pass = ok;
    r.detail = detail + ", 200 realizations";
    return r;
  }

  CriterionResult performance() {
    CriterionResult r;
    r.id = 9;
    r.name = "full-scale performance";
    const auto t0 = Clock::now();
    const SystemInputs sys = make_synthetic_system(8760, opt.seed ^ 0x09);
    const double pf = perfect_foresight(sys.instance).objective;
    const double ns = no_storage_cost(sys.demand, sys.prices, sys.instance.charge_cap);
    ControllerConfig cc;
    cc.window = 120;
    cc.scenarios = 100;
    cc.delta = 1.0;
    cc.seed = opt.seed;
    cc.threads = opt.threads;
    const OuScenarioSource src(cc.noise, cc.delta, cc.scenarios, cc.seed);
    bool ok = true;
    std::string detail = "n = 8760, r = 120, m = 100, delta 1, " + std::to_string(omp_get_max_threads()) + " threads:";
    std::ostringstream timings;
    timings << "method,hours,window,scenarios,delta,runtime_s,realized_cost_eur\n";
    for (Method m : {Method::Median, Method::Minmax}) {
      log("  full-scale " + method_name(m));
      const auto t1 = Clock::now();
      const RolloutResult out = m == Method::Median ? sliding_window_rollout(sys.instance, sys.prices, src, cc)
                                                    : minmax_rollout(sys.instance, sys.prices, src, cc);
      const double secs = since(t1);
      const std::string where = "full-scale " + method_name(m);
      audit.schedule(schedule_feasible(sys.instance, out.schedule), where);
      if (demand_within_cap(sys)) audit.sandwich(1, sandwiched(out.realized_cost, pf, ns) ? 0 : 1, where);
      if (m == Method::Minmax) {
        for (const auto& s : out.steps) audit.gap(s.gap);
      }
      ok = ok && secs < 300.0;
      detail += " " + method_name(m) + " " + fmt(secs, 3) + " s";
      timings << method_name(m) << ",8760,120,100,1," << std::setprecision(6) << secs << ','
              << std::setprecision(17) << out.realized_cost << '\n';
    }
    artifact("performance.csv", timings.str());
    r.seconds = since(t0);
    r.pass = ok;
    r.detail = detail + " (limit 300 s each)";
    return r;
  }
};

}  // namespace

ChainLpInstance random_instance(std::mt19937_64& rng, std::size_t n, double retention) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChainLpInstance inst;
  inst.retention = retention;
  inst.costs.resize(n);
  inst.lower.resize(n);
  inst.upper.resize(n);
  inst.charge_cap.resize(n);
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inst.costs[i] = -0.5 + 2.5 * unit(rng);
    inst.charge_cap[i] = unit(rng) < 0.1 ? 0.0 : 5.0 * unit(rng);
    level = retention * level + inst.charge_cap[i] * unit(rng);
    const double shape = unit(rng);
    if (shape < 0.15) {
      inst.lower[i] = inst.upper[i] = level;  // pinned level
    } else if (shape < 0.4) {
      inst.lower[i] = 0.0;
      inst.upper[i] = level + 8.0 * unit(rng);
    } else {
      inst.lower[i] = std::max(0.0, level - 4.0 * unit(rng));
      inst.upper[i] = level + 4.0 * unit(rng);
    }
  }
  return inst;
}

std::vector<CriterionResult> run_acceptance(const ValidationOptions& opt) {
  Runner run{opt, {}};
  std::vector<CriterionResult> out(10);
  const char* names[] = {"oracle equivalence",   "constraint satisfaction", "collapse identity",
                         "sandwich bound",       "OU calibration roundtrip", "min-max correctness",
                         "trend reproduction",   "sensitivity shape",       "full-scale performance",
                         "determinism across thread counts"};
  for (int i = 0; i < 10; ++i) {
    out[i].id = i + 1;
    out[i].name = names[i];
  }
  for (int i = 0; i < 10; ++i) out[i].id = i + 1;

  auto timed = [&](int id, auto&& body) {
    run.log("criterion " + std::to_string(id) + " ...");
    const auto t = Clock::now();
    try {
      out[id - 1] = body();
    } catch (const std::exception& e) {
      out[id - 1].id = id;
      out[id - 1].pass = false;
      out[id - 1].detail = std::string("error: ") + e.what();
      out[id - 1].seconds = since(t);
    }
    run.log("  " + format_result(out[id - 1]));
  };

  timed(1, [&] { return run.oracle_equivalence(); });
  timed(3, [&] { return run.collapse_identity(); });
  timed(5, [&] { return run.ou_roundtrip(); });

  const auto t6 = Clock::now();
  bool cases_ok = false;
  run.log("criterion 6 ...");
  const std::string cases = run.minmax_cases(cases_ok);
  double seconds6 = since(t6);

  timed(10, [&] { return run.determinism(); });

  if (opt.full) {
    const SystemInputs desk = run.desk_system();
    const auto t7 = Clock::now();
    DeltaSweepConfig cfg = DeltaSweepConfig::desk();
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    run.log("criterion 7 ... (desk sweep, 336 h, 6 deltas x 25 repeats x 2 methods)");
    const SweepReport rep = run_delta_sweep(desk, cfg);
    run.audit_sweep(rep, desk, "desk sweep");
    {
      std::ostringstream csv, json, timing;
      write_sweep_csv(csv, rep);
      write_sweep_json(json, rep);
      write_sweep_timings(timing, rep);
      run.artifact("sweep.csv", csv.str());
      run.artifact("sweep.json", json.str());
      run.artifact("sweep_timings.csv", timing.str());
      for (const SweepRow& row : rep.rows) {
        run.log("  " + method_name(row.method) + " delta " + fmt(row.delta, 3) + " mean " + fmt(row.mean_cost, 6) +
                " sd " + fmt(row.std_cost, 4) + " runtime " + fmt(row.runtime_s, 4) + " s");
      }
    }
    out[6] = run.trend(rep);
    out[6].seconds = since(t7);
    out[6].detail += "; pf " + fmt(rep.perfect_foresight, 6) + " EUR, no storage " + fmt(rep.no_storage, 6) + " EUR";
    run.log("  " + format_result(out[6]));
    timed(8, [&] { return run.sensitivity(desk); });
    timed(9, [&] { return run.performance(); });
  } else {
    for (int id : {7, 8, 9}) {
      out[id - 1].skipped = true;
      out[id - 1].detail = "needs --full";
    }
  }

  const Audit& a = run.audit;
  out[1].name = "constraint satisfaction";
  out[1].pass = a.infeasible == 0;
  out[1].detail = std::to_string(a.schedules) + " schedules audited, " + std::to_string(a.infeasible) + " outside bounds" +
                  (a.first_infeasible.empty() ? "" : " (first: " + a.first_infeasible + ")");

  out[3].name = "sandwich bound";
  out[3].pass = a.sandwich_violations == 0;
  out[3].detail = std::to_string(a.sandwich_runs) + " rollouts, " + std::to_string(a.sandwich_violations) + " violations";
  if (!a.violation_notes.empty()) {
    out[3].detail += ":";
    for (const auto& note : a.violation_notes) out[3].detail += " [" + note + "]";
  }

  out[5].id = 6;
  out[5].name = "min-max correctness";
  out[5].pass = cases_ok && a.max_gap <= 1e-4;
  out[5].seconds = seconds6;
  out[5].detail = cases + "; largest gap at termination " + fmt(a.max_gap, 3) + " over " +
                  std::to_string(a.minmax_runs) + " solves or runs (1e-4)";
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.skipped ? "SKIP" : r.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.name;
  if (!r.detail.empty()) os << "  (" << r.detail << ")";
  if (!r.skipped) os << " [" << std::fixed << std::setprecision(1) << r.seconds << " s]";
  return os.str();
}

}  // namespace storopt::validation
