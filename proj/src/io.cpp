#include "storopt/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace storopt::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(0, "cannot open " + path.string());
  return in;
}

// Calls row(fields, line_no) for every non-empty line after the header.
template <typename Row>
void read_csv(std::istream& in, const std::vector<std::string>& header, const std::string& name, Row&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
        fields = split(line);
      }
      bool ok = fields.size() == header.size();
      for (std::size_t i = 0; ok && i < header.size(); ++i) ok = lower(fields[i]) == header[i];
      if (!ok) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    row(fields, line_no);
  }
  if (!have_header) throw IngestError(0, name + ": empty file");
}

[[noreturn]] void bad_field(const std::string& name, std::size_t line_no, std::string_view what, std::string_view text) {
  throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": cannot parse " + std::string(what) +
                                 " '" + std::string(text) + "'");
}

void check_hourly(const std::vector<std::int64_t>& hours, const std::vector<std::string>& stamps,
                  const std::vector<std::size_t>& lines, const std::string& name) {
  std::vector<std::string> problems;
  for (std::size_t i = 1; i < hours.size(); ++i) {
    const std::int64_t step = hours[i] - hours[i - 1];
    if (step == 1) continue;
    std::string p;
    if (step == 0) {
      p = "duplicate " + stamps[i] + " (line " + std::to_string(lines[i]) + ")";
    } else if (step < 0) {
      p = "out of order " + stamps[i] + " (line " + std::to_string(lines[i]) + ")";
    } else {
      p = "gap of " + std::to_string(step - 1) + " h between " + stamps[i - 1] + " and " + stamps[i];
    }
    problems.push_back(std::move(p));
  }
  if (problems.empty()) return;
  std::string msg = name + ": series is not strictly hourly: ";
  for (std::size_t i = 0; i < problems.size() && i < 10; ++i) msg += (i ? "; " : "") + problems[i];
  if (problems.size() > 10) msg += "; and " + std::to_string(problems.size() - 10) + " more";
  throw IngestError(0, msg);
}

HourlySeries read_hourly(std::istream& in, const std::string& value_column, const std::string& name,
                         double scale, bool nonnegative) {
  HourlySeries out;
  std::vector<std::int64_t> hours;
  std::vector<std::size_t> lines;
  read_csv(in, {"timestamp", value_column}, name, [&](const std::vector<std::string_view>& f, std::size_t line_no) {
    const auto h = parse_hour_stamp(f[0]);
    if (!h) bad_field(name, line_no, "timestamp", f[0]);
    const auto v = parse_double(f[1]);
    if (!v) bad_field(name, line_no, value_column, f[1]);
    if (nonnegative && *v < 0.0) {
      throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": negative " + value_column);
    }
    hours.push_back(*h);
    lines.push_back(line_no);
    out.timestamps.emplace_back(f[0]);
    out.values.push_back(*v * scale);
  });
  if (hours.empty()) throw IngestError(0, name + ": no data rows");
  check_hourly(hours, out.timestamps, lines, name);
  out.first_hour = hours.front();
  return out;
}

double unit_scale(PriceUnit u) { return u == PriceUnit::PerMwh ? 1e-3 : 1.0; }

std::vector<double> json_vector(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw IngestError(0, std::string("instance JSON lacks array '") + key + "'");
  return j[key].get<std::vector<double>>();
}

}  // namespace

PriceUnit parse_price_unit(std::string_view text) {
  const std::string t = lower(text);
  if (t == "kwh") return PriceUnit::PerKwh;
  if (t == "mwh") return PriceUnit::PerMwh;
  throw std::invalid_argument("price unit must be kwh or mwh, got " + std::string(text));
}

std::optional<std::int64_t> parse_hour_stamp(std::string_view s) {
  s = trim(s);
  // YYYY-MM-DD[T ]HH[:MM[:SS]]
  if (s.size() < 13 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d) ||
      !parse_int(s.substr(11, 2), h)) {
    return std::nullopt;
  }
  std::string_view rest = s.substr(13);
  if (!rest.empty()) {
    if (rest.size() < 3 || rest[0] != ':' || !parse_int(rest.substr(1, 2), mi)) return std::nullopt;
    rest.remove_prefix(3);
    if (!rest.empty()) {
      if (rest.size() != 3 || rest[0] != ':' || !parse_int(rest.substr(1, 2), se)) return std::nullopt;
    }
  }
  if (h > 23 || mi != 0 || se != 0) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 + h;
}

std::string format_hour_stamp(std::int64_t hours) {
  const std::int64_t day = hours >= 0 ? hours / 24 : -((-hours + 23) / 24);
  const auto hod = static_cast<int>(hours - day * 24);
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hod);
  return buf;
}

HourlySeries read_prices(std::istream& in, PriceUnit unit, const std::string& name) {
  return read_hourly(in, "price", name, unit_scale(unit), false);
}

HourlySeries ingest_prices(const std::filesystem::path& path, PriceUnit unit) {
  auto in = open(path);
  return read_prices(in, unit, path.string());
}

HourlySeries read_demand(std::istream& in, const std::string& name) {
  return read_hourly(in, "kwh", name, 1.0, true);
}

HourlySeries ingest_demand(const std::filesystem::path& path) {
  auto in = open(path);
  return read_demand(in, path.string());
}

ForecastErrors read_forecast_errors(std::istream& in, PriceUnit unit, const std::string& name) {
  constexpr int kMaxHorizon = 120;
  const double scale = unit_scale(unit);
  // issue hour -> (label, horizon -> error)
  std::map<std::int64_t, std::pair<std::string, std::map<int, double>>> by_issue;
  int max_h = 0;
  read_csv(in, {"issue_time", "horizon_hours", "forecast", "actual"}, name,
           [&](const std::vector<std::string_view>& f, std::size_t line_no) {
             const auto issue = parse_hour_stamp(f[0]);
             if (!issue) bad_field(name, line_no, "issue_time", f[0]);
             int h = 0;
             if (!parse_int(f[1], h)) bad_field(name, line_no, "horizon_hours", f[1]);
             if (h < 1 || h > kMaxHorizon) {
               throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": horizon " +
                                              std::to_string(h) + " outside 1..120");
             }
             const auto fc = parse_double(f[2]);
             if (!fc) bad_field(name, line_no, "forecast", f[2]);
             const auto ac = parse_double(f[3]);
             if (!ac) bad_field(name, line_no, "actual", f[3]);
             auto& entry = by_issue[*issue];
             if (entry.first.empty()) entry.first = std::string(f[0]);
             if (!entry.second.emplace(h, (*fc - *ac) * scale).second) {
               throw IngestError(line_no, name + ": line " + std::to_string(line_no) + ": duplicate horizon " +
                                              std::to_string(h) + " for issue " + std::string(f[0]));
             }
             max_h = std::max(max_h, h);
           });
  ForecastErrors out;
  for (auto& [hour, entry] : by_issue) {
    auto& [label, errs] = entry;
    if (static_cast<int>(errs.size()) != max_h) {
      out.warnings.push_back("dropped issue " + label + ": " + std::to_string(max_h - static_cast<int>(errs.size())) +
                             " of " + std::to_string(max_h) + " horizons missing");
      continue;
    }
    std::vector<double> traj;
    traj.reserve(errs.size());
    for (const auto& [h, e] : errs) traj.push_back(e);
    out.issue_times.push_back(label);
    out.trajectories.push_back(std::move(traj));
  }
  if (by_issue.empty()) throw IngestError(0, name + ": no data rows");
  return out;
}

ForecastErrors ingest_forecast_errors(const std::filesystem::path& path, PriceUnit unit) {
  auto in = open(path);
  return read_forecast_errors(in, unit, path.string());
}

nlohmann::ordered_json instance_to_json(const ChainLpInstance& inst) {
  nlohmann::ordered_json j;
  j["retention"] = inst.retention;
  j["costs"] = inst.costs;
  j["lower"] = inst.lower;
  j["upper"] = inst.upper;
  j["charge_cap"] = inst.charge_cap;
  return j;
}

ChainLpInstance instance_from_json(const nlohmann::json& j) {
  ChainLpInstance inst;
  if (!j.contains("retention") || !j["retention"].is_number()) throw IngestError(0, "instance JSON lacks 'retention'");
  inst.retention = j["retention"].get<double>();
  inst.costs = json_vector(j, "costs");
  inst.lower = json_vector(j, "lower");
  inst.upper = json_vector(j, "upper");
  inst.charge_cap = json_vector(j, "charge_cap");
  check_structure(inst);
  return inst;
}

void write_schedule_csv(std::ostream& os, const ChainLpInstance& inst, const std::vector<double>& x,
                        const std::vector<double>& prices, const std::vector<std::string>& timestamps) {
  const std::vector<double> y = level_trajectory(inst, x);
  os << "step,timestamp,x_kwh,level_kwh,price_eur_per_kwh\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << i + 1 << ',' << (i < timestamps.size() ? timestamps[i] : std::string()) << ',' << x[i] << ',' << y[i] << ','
       << prices[i] << '\n';
  }
}

void write_price_csv(std::ostream& os, const std::vector<double>& values, std::int64_t first_hour,
                     std::string_view column) {
  os << "timestamp," << column << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << format_hour_stamp(first_hour + static_cast<std::int64_t>(i)) << ',' << values[i] << '\n';
  }
}

nlohmann::ordered_json ou_to_json(const OuParams& p) {
  nlohmann::ordered_json j;
  j["theta"] = p.theta;
  j["diffusion"] = p.diffusion;
  j["dt"] = p.dt;
  return j;
}

OuParams ou_from_json(const nlohmann::json& j) {
  OuParams p;
  p.theta = j.value("theta", p.theta);
  p.diffusion = j.value("diffusion", p.diffusion);
  p.dt = j.value("dt", p.dt);
  p.validate();
  return p;
}

void RunConfig::validate() const {
  if (instance_json && (prices_csv || demand_csv)) {
    throw std::invalid_argument("give either an instance JSON or price/demand CSVs, not both");
  }
  if (stochastic() && !seed_given) throw std::invalid_argument(command + " is stochastic and needs --seed");
  if (synthetic_hours < 24) throw std::invalid_argument("synthetic horizon must be at least 24 hours");
  if (method != "median" && method != "minmax") throw std::invalid_argument("method must be median or minmax");
  controller.validate();
  household.validate();
  if (command == "sweep") sweep.validate();
}

bool RunConfig::stochastic() const { return command == "rollout" || command == "sweep"; }

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  auto opt = [&](const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
  };
  opt("prices_csv", c.prices_csv);
  opt("demand_csv", c.demand_csv);
  opt("forecast_csv", c.forecast_csv);
  opt("instance_json", c.instance_json);
  opt("ou_json", c.ou_json);
  j["price_unit"] = c.price_unit == PriceUnit::PerMwh ? "mwh" : "kwh";
  j["synthetic"] = {{"hours", c.synthetic_hours}, {"seed", c.synthetic_seed}};
  nlohmann::ordered_json hh;
  if (c.household.annual_heat_demand) hh["annual_heat_demand"] = *c.household.annual_heat_demand;
  if (c.household.living_area) hh["living_area"] = *c.household.living_area;
  if (c.household.specific_demand) hh["specific_demand"] = *c.household.specific_demand;
  hh["max_charge_power"] = c.household.max_charge_power;
  hh["capacity_days"] = c.household.capacity_days;
  hh["retention"] = c.household.retention;
  j["household"] = hh;
  nlohmann::ordered_json cc;
  cc["window"] = c.controller.window;
  cc["scenarios"] = c.controller.scenarios;
  cc["measure"] = c.controller.measure.name();
  cc["delta"] = c.controller.delta;
  cc["noise"] = ou_to_json(c.controller.noise);
  if (c.controller.extension) cc["extension"] = *c.controller.extension;
  else cc["extension"] = nullptr;
  cc["gap_tol"] = c.controller.gap_tol;
  cc["max_iterations"] = c.controller.max_iterations;
  j["controller"] = cc;
  j["method"] = c.method;
  nlohmann::ordered_json sw;
  sw["deltas"] = c.sweep.deltas;
  std::vector<std::string> methods;
  for (Method m : c.sweep.methods) methods.push_back(method_name(m));
  sw["methods"] = methods;
  sw["repeats"] = c.sweep.repeats;
  sw["realizations"] = c.sweep.realizations;
  j["sweep"] = sw;
  j["sensitivity"] = c.sensitivity;
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.value("command", std::string());
  if (j.contains("seed")) {
    c.seed = j["seed"].get<std::uint64_t>();
    c.seed_given = true;
  }
  auto opt = [&](const char* key, std::optional<std::string>& v) {
    if (j.contains(key) && j[key].is_string()) v = j[key].get<std::string>();
  };
  opt("prices_csv", c.prices_csv);
  opt("demand_csv", c.demand_csv);
  opt("forecast_csv", c.forecast_csv);
  opt("instance_json", c.instance_json);
  opt("ou_json", c.ou_json);
  c.price_unit = parse_price_unit(j.value("price_unit", std::string("kwh")));
  if (j.contains("synthetic")) {
    c.synthetic_hours = j["synthetic"].value("hours", c.synthetic_hours);
    c.synthetic_seed = j["synthetic"].value("seed", c.synthetic_seed);
  }
  if (j.contains("household")) {
    const auto& hh = j["household"];
    c.household.annual_heat_demand.reset();
    if (hh.contains("annual_heat_demand")) c.household.annual_heat_demand = hh["annual_heat_demand"].get<double>();
    if (hh.contains("living_area")) c.household.living_area = hh["living_area"].get<double>();
    if (hh.contains("specific_demand")) c.household.specific_demand = hh["specific_demand"].get<double>();
    c.household.max_charge_power = hh.value("max_charge_power", c.household.max_charge_power);
    c.household.capacity_days = hh.value("capacity_days", c.household.capacity_days);
    c.household.retention = hh.value("retention", c.household.retention);
  }
  if (j.contains("controller")) {
    const auto& cc = j["controller"];
    c.controller.window = cc.value("window", c.controller.window);
    c.controller.scenarios = cc.value("scenarios", c.controller.scenarios);
    c.controller.measure = Measure::parse(cc.value("measure", std::string("median")));
    c.controller.delta = cc.value("delta", c.controller.delta);
    if (cc.contains("noise")) c.controller.noise = ou_from_json(cc["noise"]);
    if (cc.contains("extension") && cc["extension"].is_number()) c.controller.extension = cc["extension"].get<std::size_t>();
    c.controller.gap_tol = cc.value("gap_tol", c.controller.gap_tol);
    c.controller.max_iterations = cc.value("max_iterations", c.controller.max_iterations);
  }
  c.method = j.value("method", c.method);
  if (j.contains("sweep")) {
    const auto& sw = j["sweep"];
    if (sw.contains("deltas")) c.sweep.deltas = sw["deltas"].get<std::vector<double>>();
    if (sw.contains("methods")) {
      c.sweep.methods.clear();
      for (const auto& m : sw["methods"]) c.sweep.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.sweep.repeats = sw.value("repeats", c.sweep.repeats);
    c.sweep.realizations = sw.value("realizations", c.sweep.realizations);
  }
  c.sensitivity = j.value("sensitivity", c.sensitivity);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  return c;
}

std::string version() { return "0.1.0"; }

}  // namespace storopt::io
