#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "storopt/controllers.hpp"
#include "storopt/experiments.hpp"
#include "storopt/io.hpp"
#include "storopt/minmax.hpp"
#include "storopt/ou.hpp"
#include "storopt/validation.hpp"

namespace fs = std::filesystem;
using namespace storopt;
using nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

// Bad input or a failed validation run.
struct Invalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t window = 120;
  std::size_t scenarios = 1000;
  double delta = 1.0;
  std::string measure = "median";
  std::string price_unit = "kwh";
  std::string out = "out";
  bool desk = false;
  int threads = 0;
  std::size_t extend = 0;
  std::string method = "median";
  std::string prices, demand, forecast, instance, ou;
  std::size_t hours = 336;
  std::uint64_t synthetic_seed = 1;
  std::vector<double> deltas;
  std::vector<std::string> methods;
  std::size_t repeats = 25;
  std::size_t realizations = 5000;
  bool sensitivity = false;
  bool full = false;
};

struct Options {
  CLI::Option* seed = nullptr;
  CLI::Option* window = nullptr;
  CLI::Option* scenarios = nullptr;
  CLI::Option* delta = nullptr;
  CLI::Option* measure = nullptr;
  CLI::Option* price_unit = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* extend = nullptr;
  CLI::Option* method = nullptr;
  CLI::Option* prices = nullptr;
  CLI::Option* demand = nullptr;
  CLI::Option* forecast = nullptr;
  CLI::Option* instance = nullptr;
  CLI::Option* ou = nullptr;
  CLI::Option* hours = nullptr;
  CLI::Option* synthetic_seed = nullptr;
  CLI::Option* deltas = nullptr;
  CLI::Option* methods = nullptr;
  CLI::Option* repeats = nullptr;
  CLI::Option* realizations = nullptr;
  CLI::Option* sensitivity = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

void add_common(CLI::App* cmd, Flags& f, Options& o) {
  cmd->add_option("--config", f.config_path, "Run config JSON, e.g. an echoed config.json; flags override it")
      ->check(CLI::ExistingFile);
  o.out = cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  o.threads = cmd->add_option("--threads", f.threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

void add_inputs(CLI::App* cmd, Flags& f, Options& o) {
  o.prices = cmd->add_option("--prices", f.prices, "Hourly prices CSV (timestamp,price)")->check(CLI::ExistingFile);
  o.demand = cmd->add_option("--demand", f.demand, "Hourly heat demand CSV (timestamp,kwh)")->check(CLI::ExistingFile);
  o.price_unit = cmd->add_option("--price-unit", f.price_unit, "Unit of price columns")
                     ->check(CLI::IsMember({"kwh", "mwh"}, CLI::ignore_case))
                     ->capture_default_str();
  o.hours = cmd->add_option("--hours", f.hours, "Synthetic horizon when no CSV is given")->capture_default_str();
  o.synthetic_seed =
      cmd->add_option("--synthetic-seed", f.synthetic_seed, "Seed of the synthetic prices and demand")->capture_default_str();
}

void add_controller(CLI::App* cmd, Flags& f, Options& o) {
  o.seed = cmd->add_option("--seed", f.seed, "Master seed (required)");
  o.window = cmd->add_option("--window-hours", f.window, "Rolling window length r")->capture_default_str();
  o.scenarios = cmd->add_option("--scenarios", f.scenarios, "Scenarios per window m")->capture_default_str();
  o.delta = cmd->add_option("--delta", f.delta, "Perturbation scale")->capture_default_str();
  o.measure = cmd->add_option("--measure", f.measure, "median | mean | quantile:<p>")->capture_default_str();
  o.extend = cmd->add_option("--extend-hours", f.extend, "Periodic continuation past the horizon (default r - 1)");
  o.ou = cmd->add_option("--ou", f.ou, "OU parameter JSON from calibrate")->check(CLI::ExistingFile);
}

io::RunConfig assemble(const std::string& command, const Flags& f, const Options& o) {
  io::RunConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    const auto j = nlohmann::json::parse(in);
    c = io::config_from_json(j.contains("config") ? j["config"] : j);
  }
  c.command = command;
  if (f.desk) {
    const DeltaSweepConfig desk = DeltaSweepConfig::desk();
    c.sweep.deltas = desk.deltas;
    c.sweep.repeats = desk.repeats;
    c.sweep.realizations = desk.realizations;
    c.controller.scenarios = desk.controller.scenarios;
  }
  if (given(o.seed)) {
    c.seed = f.seed;
    c.seed_given = true;
  }
  if (given(o.window)) c.controller.window = f.window;
  if (given(o.scenarios)) c.controller.scenarios = f.scenarios;
  if (given(o.delta)) c.controller.delta = f.delta;
  if (given(o.measure)) c.controller.measure = Measure::parse(f.measure);
  if (given(o.extend)) c.controller.extension = f.extend;
  if (given(o.method)) c.method = f.method;
  if (given(o.prices)) c.prices_csv = f.prices;
  if (given(o.demand)) c.demand_csv = f.demand;
  if (given(o.forecast)) c.forecast_csv = f.forecast;
  if (given(o.instance)) c.instance_json = f.instance;
  if (given(o.ou)) c.ou_json = f.ou;
  if (given(o.price_unit)) c.price_unit = io::parse_price_unit(f.price_unit);
  if (given(o.hours)) c.synthetic_hours = f.hours;
  if (given(o.synthetic_seed)) c.synthetic_seed = f.synthetic_seed;
  if (given(o.deltas)) c.sweep.deltas = f.deltas;
  if (given(o.methods)) {
    c.sweep.methods.clear();
    for (const auto& m : f.methods) c.sweep.methods.push_back(parse_method(m));
  }
  if (given(o.repeats)) c.sweep.repeats = f.repeats;
  if (given(o.realizations)) c.sweep.realizations = f.realizations;
  if (given(o.sensitivity)) c.sensitivity = f.sensitivity;
  if (given(o.out)) c.out_dir = f.out;
  if (given(o.threads)) c.threads = f.threads;
  if (c.ou_json) {
    std::ifstream in(*c.ou_json);
    const auto j = nlohmann::json::parse(in);
    c.controller.noise = io::ou_from_json(j.contains("params") ? j["params"] : j);
    c.ou_json.reset();  // the parameters are now part of the echoed config
  }
  c.controller.seed = c.seed;
  c.controller.threads = c.threads;
  c.sweep.seed = c.seed;
  c.sweep.threads = c.threads;
  c.sweep.controller = c.controller;
  c.validate();
  return c;
}

fs::path prepare_out(const io::RunConfig& c) {
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  ordered_json echo;
  echo["version"] = io::version();
  echo["config"] = io::config_to_json(c);
  std::ofstream(dir / "config.json") << echo.dump(2) << '\n';
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Loaded {
  SystemInputs system;
  bool has_demand = true;
  std::vector<std::string> timestamps;
};

// Prices and demand from CSVs where given, the synthetic generator otherwise.
Loaded load_system(const io::RunConfig& c) {
  Loaded out;
  if (c.instance_json) {
    std::ifstream in(*c.instance_json);
    if (!in) throw std::runtime_error("cannot open " + *c.instance_json);
    out.system.instance = io::instance_from_json(nlohmann::json::parse(in));
    out.system.prices = out.system.instance.costs;
    out.has_demand = false;
    return out;
  }
  if (!c.prices_csv && !c.demand_csv) {
    out.system = make_synthetic_system(c.synthetic_hours, c.synthetic_seed, c.household);
    return out;
  }

  std::optional<io::HourlySeries> prices, demand;
  if (c.prices_csv) prices = io::ingest_prices(*c.prices_csv, c.price_unit);
  if (c.demand_csv) demand = io::ingest_demand(*c.demand_csv);
  if (prices && demand) {
    if (prices->first_hour != demand->first_hour || prices->values.size() != demand->values.size()) {
      throw io::IngestError(0, "price and demand series cover different hours (" + prices->timestamps.front() + " +" +
                                   std::to_string(prices->values.size()) + " h vs " + demand->timestamps.front() + " +" +
                                   std::to_string(demand->values.size()) + " h)");
    }
  }
  const io::HourlySeries& lead = prices ? *prices : *demand;
  const std::size_t n = lead.values.size();
  // fill the missing stream from the generator over the same hours
  const SystemInputs fill = (prices && demand) ? SystemInputs{} : make_synthetic_system(n, c.synthetic_seed, c.household);
  std::vector<double> p = prices ? prices->values : fill.prices;
  std::vector<double> d = demand ? demand->values : fill.demand;
  out.system = make_system(std::move(d), std::move(p), c.household);
  out.timestamps = lead.timestamps;
  return out;
}

ordered_json rollout_json(const RolloutResult& r, const Loaded& sys, double pf, double seconds,
                          const std::string& method) {
  ordered_json j;
  j["method"] = method;
  j["realized_cost_eur"] = r.realized_cost;
  j["perfect_foresight_eur"] = pf;
  if (sys.has_demand) {
    j["no_storage_eur"] = no_storage_cost(sys.system.demand, sys.system.prices, sys.system.instance.charge_cap);
  } else {
    j["no_storage_eur"] = nullptr;
  }
  j["final_level_kwh"] = r.final_level;
  j["surplus_eur"] = r.surplus_value;
  j["runtime_s"] = seconds;
  double max_gap = 0.0;
  std::size_t max_iter = 0;
  for (const auto& s : r.steps) {
    max_gap = std::max(max_gap, s.gap);
    max_iter = std::max(max_iter, s.iterations);
  }
  j["max_gap"] = max_gap;
  j["max_iterations"] = max_iter;
  ordered_json steps = ordered_json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"x_kwh", s.chosen}, {"spread_lo", s.spread_lo}, {"spread_hi", s.spread_hi}, {"gap", s.gap},
                     {"iterations", s.iterations}});
  }
  j["steps"] = steps;
  return j;
}

int cmd_calibrate(const io::RunConfig& c) {
  if (!c.forecast_csv) throw Invalid("calibrate needs --forecast");
  const fs::path dir = prepare_out(c);
  const io::ForecastErrors fe = io::ingest_forecast_errors(*c.forecast_csv, c.price_unit);
  for (const auto& w : fe.warnings) std::cerr << "warning: " << w << '\n';
  if (fe.trajectories.empty()) throw Invalid("no complete forecast trajectory in " + *c.forecast_csv);
  // horizon 0 is the issue hour itself, where the error is zero
  std::vector<std::vector<double>> paths;
  for (const auto& t : fe.trajectories) {
    std::vector<double> v{0.0};
    v.insert(v.end(), t.begin(), t.end());
    paths.push_back(std::move(v));
  }
  const CalibrationResult cal = calibrate_ou(paths);
  for (std::size_t k : cal.skipped) std::cerr << "warning: skipped degenerate trajectory " << fe.issue_times[k] << '\n';
  ordered_json j;
  j["params"] = io::ou_to_json(cal.params);
  j["trajectories_used"] = cal.used;
  j["trajectories_skipped"] = cal.skipped.size();
  j["trajectories_dropped"] = fe.warnings.size();
  j["stationary_sd"] = std::sqrt(cal.params.stationary_variance());
  write_file(dir / "ou_params.json", j.dump(2) + '\n');
  std::cout << "theta " << cal.params.theta << " 1/h, D " << cal.params.diffusion << " from " << cal.used
            << " trajectories -> " << (dir / "ou_params.json").string() << '\n';
  return 0;
}

int cmd_solve(const io::RunConfig& c) {
  const fs::path dir = prepare_out(c);
  const Loaded sys = load_system(c);
  const ChargeSchedule pf = perfect_foresight(sys.system.instance);
  std::ostringstream csv;
  io::write_schedule_csv(csv, sys.system.instance, pf.x, sys.system.prices, sys.timestamps);
  write_file(dir / "schedule.csv", csv.str());
  ordered_json j;
  j["objective_eur"] = pf.objective;
  j["steps"] = pf.x.size();
  if (sys.has_demand) {
    j["no_storage_eur"] = no_storage_cost(sys.system.demand, sys.system.prices, sys.system.instance.charge_cap);
  }
  write_file(dir / "solve.json", j.dump(2) + '\n');
  std::cout << std::setprecision(10) << "perfect-foresight cost " << pf.objective << " EUR over " << pf.x.size()
            << " h -> " << (dir / "schedule.csv").string() << '\n';
  return 0;
}

int cmd_rollout(const io::RunConfig& c) {
  const fs::path dir = prepare_out(c);
  const Loaded sys = load_system(c);
  const double pf = perfect_foresight(sys.system.instance).objective;
  const OuScenarioSource src(c.controller.noise, c.controller.delta, c.controller.scenarios, c.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const RolloutResult r = c.method == "minmax" ? minmax_rollout(sys.system.instance, sys.system.prices, src, c.controller)
                                               : sliding_window_rollout(sys.system.instance, sys.system.prices, src,
                                                                        c.controller);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream csv;
  io::write_schedule_csv(csv, sys.system.instance, r.schedule, sys.system.prices, sys.timestamps);
  write_file(dir / "schedule.csv", csv.str());
  write_file(dir / "rollout.json", rollout_json(r, sys, pf, secs, c.method).dump(2) + '\n');
  std::cout << std::setprecision(10) << c.method << " rollout cost " << r.realized_cost << " EUR (perfect foresight "
            << pf << ") in " << std::setprecision(3) << secs << " s -> " << dir.string() << '\n';
  return 0;
}

int cmd_sweep(const io::RunConfig& c) {
  if (c.instance_json) throw Invalid("sweep needs demand: give CSVs or use the synthetic system");
  const fs::path dir = prepare_out(c);
  const Loaded sys = load_system(c);
  const SweepReport rep = run_delta_sweep(sys.system, c.sweep);
  std::ostringstream csv, json, timings;
  write_sweep_csv(csv, rep);
  write_sweep_json(json, rep);
  write_sweep_timings(timings, rep);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "sweep.json", json.str());
  write_file(dir / "sweep_timings.csv", timings.str());
  std::cout << std::setprecision(6) << "perfect foresight " << rep.perfect_foresight << " EUR, no storage "
            << rep.no_storage << " EUR\n";
  for (const SweepRow& r : rep.rows) {
    std::cout << "  " << method_name(r.method) << " delta " << r.delta << ": mean " << r.mean_cost << " sd "
              << r.std_cost << " (" << r.runs << " runs, " << r.runtime_s << " s)"
              << (r.error.empty() ? "" : " error: " + r.error) << '\n';
  }
  if (c.sensitivity) {
    for (Method m : c.sweep.methods) {
      std::ostringstream s;
      write_sensitivity_csv(s, run_sensitivity(sys.system, m, c.sweep));
      write_file(dir / ("sensitivity_" + method_name(m) + ".csv"), s.str());
    }
  }
  std::cout << "-> " << dir.string() << '\n';
  bool any_error = false;
  for (const SweepRow& r : rep.rows) any_error = any_error || !r.error.empty();
  return any_error ? kExitError : 0;
}

int cmd_validate(const io::RunConfig& c, bool full) {
  validation::ValidationOptions opt;
  if (c.seed_given) opt.seed = c.seed;
  opt.threads = c.threads;
  opt.full = full;
  opt.log = &std::cerr;
  opt.artifacts_dir = c.out_dir;
  const auto results = validation::run_acceptance(opt);
  bool ok = true;
  ordered_json j = ordered_json::array();
  for (const auto& r : results) {
    std::cout << validation::format_result(r) << '\n';
    ok = ok && (r.pass || r.skipped);
    j.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"skipped", r.skipped}, {"detail", r.detail},
                 {"seconds", r.seconds}});
  }
  fs::create_directories(c.out_dir);
  write_file(fs::path(c.out_dir) / "validation.json", j.dump(2) + '\n');
  if (!ok) throw Invalid("validation failed");
  return 0;
}

int cmd_generate(const io::RunConfig& c) {
  const fs::path dir = prepare_out(c);
  const SystemInputs sys = make_synthetic_system(c.synthetic_hours, c.synthetic_seed, c.household);
  // 1 July 2021, 00:00
  const std::int64_t start = *io::parse_hour_stamp("2021-07-01T00");
  std::ostringstream p, d, fe;
  io::write_price_csv(p, sys.prices, start, "price");
  io::write_price_csv(d, sys.demand, start, "kwh");
  write_file(dir / "prices.csv", p.str());
  write_file(dir / "demand.csv", d.str());
  // one 120 h forecast per day, errors drawn from the configured OU process
  fe << "issue_time,horizon_hours,forecast,actual\n" << std::setprecision(17);
  for (std::size_t day = 0; day * 24 + 120 < sys.prices.size() + 1; ++day) {
    RngStream rng = make_stream(c.synthetic_seed, 0xfe, day);
    const auto err = simulate_ou(c.controller.noise, 121, rng).values;
    const std::string issue = io::format_hour_stamp(start + static_cast<std::int64_t>(day * 24));
    for (std::size_t h = 1; h <= 120; ++h) {
      const double actual = sys.prices[day * 24 + h - 1];
      fe << issue << ',' << h << ',' << actual + err[h] << ',' << actual << '\n';
    }
  }
  write_file(dir / "forecast_errors.csv", fe.str());
  std::cout << "synthetic " << sys.prices.size() << " h -> " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage dispatch under price uncertainty"};
  app.set_version_flag("--version", io::version());
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, Options> per_command;

  auto* calibrate = app.add_subcommand("calibrate", "Fit OU parameters to a forecast-error CSV");
  Options* op = &per_command["calibrate"];
  add_common(calibrate, f, *op);
  op->forecast = calibrate->add_option("--forecast", f.forecast, "issue_time,horizon_hours,forecast,actual CSV")
                   ->check(CLI::ExistingFile);
  op->price_unit = calibrate->add_option("--price-unit", f.price_unit, "Unit of the forecast columns")
                     ->check(CLI::IsMember({"kwh", "mwh"}, CLI::ignore_case));

  op = &per_command["solve"];
  auto* solve = app.add_subcommand("solve", "Perfect-foresight schedule");
  add_common(solve, f, *op);
  add_inputs(solve, f, *op);
  op->instance = solve->add_option("--instance", f.instance, "Instance JSON instead of CSVs")->check(CLI::ExistingFile);

  op = &per_command["rollout"];
  auto* rollout = app.add_subcommand("rollout", "Sliding-window rollout under perturbed forecasts");
  add_common(rollout, f, *op);
  add_inputs(rollout, f, *op);
  add_controller(rollout, f, *op);
  op->instance = rollout->add_option("--instance", f.instance, "Instance JSON instead of CSVs")->check(CLI::ExistingFile);
  op->method = rollout->add_option("--method", f.method, "median | minmax")
                 ->check(CLI::IsMember({"median", "minmax"}))
                 ->capture_default_str();

  op = &per_command["sweep"];
  auto* sweep = app.add_subcommand("sweep", "Cost over a delta grid, repeated");
  add_common(sweep, f, *op);
  add_inputs(sweep, f, *op);
  add_controller(sweep, f, *op);
  sweep->add_flag("--desk-scale", f.desk, "6-point delta grid, 25 repeats, m = 100, 200 realizations");
  op->deltas = sweep->add_option("--deltas", f.deltas, "Delta grid, strictly increasing")->delimiter(',');
  op->methods = sweep->add_option("--methods", f.methods, "Methods to sweep")
                  ->delimiter(',')
                  ->check(CLI::IsMember({"median", "minmax"}));
  op->repeats = sweep->add_option("--repeats", f.repeats, "Repeats per cell");
  op->realizations = sweep->add_option("--realizations", f.realizations, "Sensitivity paths per delta");
  op->sensitivity = sweep->add_flag("--sensitivity", f.sensitivity, "Also run the fixed-schedule sensitivity study");

  op = &per_command["validate"];
  auto* validate = app.add_subcommand("validate", "Run the acceptance criteria");
  add_common(validate, f, *op);
  op->seed = validate->add_option("--seed", f.seed, "Seed of the randomized checks");
  validate->add_flag("--full", f.full, "Include the desk sweep, sensitivity and full-scale runs");

  op = &per_command["generate"];
  auto* generate = app.add_subcommand("generate", "Write synthetic prices, demand and forecast errors");
  add_common(generate, f, *op);
  op->hours = generate->add_option("--hours", f.hours, "Hours to generate")->capture_default_str();
  op->synthetic_seed = generate->add_option("--synthetic-seed", f.synthetic_seed, "Generator seed")->capture_default_str();
  op->ou = generate->add_option("--ou", f.ou, "OU parameters for the forecast errors")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    const io::RunConfig c = assemble(name, f, per_command.at(name));
    if (c.threads > 0) omp_set_num_threads(c.threads);
    if (name == "calibrate") return cmd_calibrate(c);
    if (name == "solve") return cmd_solve(c);
    if (name == "rollout") return cmd_rollout(c);
    if (name == "sweep") return cmd_sweep(c);
    if (name == "validate") return cmd_validate(c, f.full);
    if (name == "generate") return cmd_generate(c);
  } catch (const Invalid& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const io::IngestError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
