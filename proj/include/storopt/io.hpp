#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storopt/chain_lp.hpp"
#include "storopt/controllers.hpp"
#include "storopt/experiments.hpp"
#include "storopt/ou.hpp"
#include "storopt/pth.hpp"

namespace storopt::io {

// Malformed or inconsistent input. `line` is 1-based, 0 when not tied to a row.
class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& what) : std::runtime_error(what), line(line) {}
  std::size_t line;
};

enum class PriceUnit { PerKwh, PerMwh };
PriceUnit parse_price_unit(std::string_view text);  // "kwh" | "mwh"

/// Hours since 1970-01-01T00:00 for "YYYY-MM-DDTHH[:MM[:SS]]" (a space may
/// replace the T). Minutes and seconds must be zero.
std::optional<std::int64_t> parse_hour_stamp(std::string_view text);
std::string format_hour_stamp(std::int64_t hours);

struct HourlySeries {
  std::vector<std::string> timestamps;
  std::vector<double> values;
  std::int64_t first_hour = 0;
};

/// header timestamp,price; strictly hourly. MWh prices are divided by 1000.
HourlySeries ingest_prices(const std::filesystem::path& path, PriceUnit unit);
HourlySeries read_prices(std::istream& in, PriceUnit unit, const std::string& name = "prices");

/// header timestamp,kwh; strictly hourly, non-negative.
HourlySeries ingest_demand(const std::filesystem::path& path);
HourlySeries read_demand(std::istream& in, const std::string& name = "demand");

struct ForecastErrors {
  std::vector<std::string> issue_times;           // one per kept trajectory
  std::vector<std::vector<double>> trajectories;  // forecast - actual, by horizon
  std::vector<std::string> warnings;
};

/// header issue_time,horizon_hours,forecast,actual with horizons in 1..120.
/// Trajectories are expected to cover 1..H with H the largest horizon in the
/// file; incomplete ones are dropped with a warning.
ForecastErrors ingest_forecast_errors(const std::filesystem::path& path, PriceUnit unit = PriceUnit::PerKwh);
ForecastErrors read_forecast_errors(std::istream& in, PriceUnit unit = PriceUnit::PerKwh,
                                    const std::string& name = "forecast");

nlohmann::ordered_json instance_to_json(const ChainLpInstance& inst);
ChainLpInstance instance_from_json(const nlohmann::json& j);

/// step,timestamp,x_kwh,level_kwh,price_eur_per_kwh
void write_schedule_csv(std::ostream& os, const ChainLpInstance& inst, const std::vector<double>& x,
                        const std::vector<double>& prices, const std::vector<std::string>& timestamps = {});

void write_price_csv(std::ostream& os, const std::vector<double>& values, std::int64_t first_hour,
                     std::string_view column = "price");

nlohmann::ordered_json ou_to_json(const OuParams& p);
OuParams ou_from_json(const nlohmann::json& j);

// Everything a command needs to reproduce its output. Each data stream comes
// either from a CSV path or from the synthetic generator, never both.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::optional<std::string> prices_csv;
  std::optional<std::string> demand_csv;
  std::optional<std::string> forecast_csv;
  std::optional<std::string> instance_json;
  std::optional<std::string> ou_json;
  PriceUnit price_unit = PriceUnit::PerKwh;
  std::size_t synthetic_hours = 336;
  std::uint64_t synthetic_seed = 1;
  HouseholdSpec household;
  ControllerConfig controller;
  std::string method = "median";
  DeltaSweepConfig sweep;
  bool sensitivity = false;
  std::string out_dir = "out";
  int threads = 0;

  void validate() const;
  bool stochastic() const;
};

nlohmann::ordered_json config_to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

std::string version();

}  // namespace storopt::io
