#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "storopt/io.hpp"

using namespace storopt;
using namespace storopt::io;

namespace {

std::string forecast_csv(const std::vector<std::string>& issues, int horizons,
                         const std::vector<std::vector<double>>& errors) {
  std::ostringstream os;
  os << "issue_time,horizon_hours,forecast,actual\n";
  for (std::size_t t = 0; t < issues.size(); ++t) {
    for (int h = 1; h <= horizons; ++h) {
      const double e = errors.empty() ? 0.0 : errors[t][h - 1];
      os << issues[t] << ',' << h << ',' << std::setprecision(17) << 0.05 + e << ",0.05\n";
    }
  }
  return os.str();
}

std::string issue_stamp(int day) { return format_hour_stamp(*parse_hour_stamp("2020-01-01T00") + 24 * day); }

}  // namespace

TEST(HourStamp, ParsesAndFormats) {
  EXPECT_EQ(parse_hour_stamp("1970-01-01T00"), 0);
  EXPECT_EQ(parse_hour_stamp("1970-01-02 01:00"), 25);
  EXPECT_EQ(parse_hour_stamp("2020-03-01T05:00:00"), parse_hour_stamp("2020-02-29T05").value() + 24);
  EXPECT_FALSE(parse_hour_stamp("2020-01-01T00:30"));
  EXPECT_FALSE(parse_hour_stamp("2020-13-01T00"));
  EXPECT_FALSE(parse_hour_stamp("2020-02-30T00"));
  EXPECT_FALSE(parse_hour_stamp("2020-01-01T24"));
  EXPECT_FALSE(parse_hour_stamp("yesterday"));
  for (std::int64_t h : {0LL, 1LL, 438000LL, 500123LL}) EXPECT_EQ(parse_hour_stamp(format_hour_stamp(h)), h);
}

TEST(Prices, ThreeRowsThreeValues) {
  std::istringstream in("timestamp,price\n2021-01-01T00:00,0.031\n2021-01-01T01:00,0.029\n2021-01-01T02:00,0.035\n");
  const auto s = read_prices(in, PriceUnit::PerKwh);
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_DOUBLE_EQ(s.values[0], 0.031);
  EXPECT_DOUBLE_EQ(s.values[2], 0.035);
  EXPECT_EQ(s.first_hour, *parse_hour_stamp("2021-01-01T00"));
}

TEST(Prices, MwhConverted) {
  std::istringstream in("timestamp,price\n2021-01-01T00,50\n");
  EXPECT_DOUBLE_EQ(read_prices(in, PriceUnit::PerMwh).values[0], 0.05);
  EXPECT_EQ(parse_price_unit("MWh"), PriceUnit::PerMwh);
  EXPECT_THROW(parse_price_unit("ct"), std::invalid_argument);
}

TEST(Prices, MissingHourNamesTheGap) {
  std::istringstream in("timestamp,price\n2021-01-01T00,1\n2021-01-01T01,1\n2021-01-01T04,1\n");
  try {
    read_prices(in, PriceUnit::PerKwh);
    FAIL();
  } catch (const IngestError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("gap of 2 h"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2021-01-01T01"), std::string::npos);
    EXPECT_NE(msg.find("2021-01-01T04"), std::string::npos);
  }
}

TEST(Prices, DuplicatesAndDisorderReported) {
  std::istringstream dup("timestamp,price\n2021-01-01T00,1\n2021-01-01T00,1\n");
  EXPECT_THROW(read_prices(dup, PriceUnit::PerKwh), IngestError);
  std::istringstream back("timestamp,price\n2021-01-01T02,1\n2021-01-01T01,1\n");
  try {
    read_prices(back, PriceUnit::PerKwh);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("out of order"), std::string::npos);
  }
}

TEST(Prices, MalformedRowsCarryLineNumbers) {
  std::istringstream in("timestamp,price\n2021-01-01T00,1\n2021-01-01T01,abc\n");
  try {
    read_prices(in, PriceUnit::PerKwh);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.line, 3u);
  }
  std::istringstream hdr("time,price\n2021-01-01T00,1\n");
  EXPECT_THROW(read_prices(hdr, PriceUnit::PerKwh), IngestError);
  std::istringstream empty("");
  EXPECT_THROW(read_prices(empty, PriceUnit::PerKwh), IngestError);
  std::istringstream only_header("timestamp,price\n");
  EXPECT_THROW(read_prices(only_header, PriceUnit::PerKwh), IngestError);
  std::istringstream fields("timestamp,price\n2021-01-01T00,1,2\n");
  EXPECT_THROW(read_prices(fields, PriceUnit::PerKwh), IngestError);
}

TEST(Prices, BomAndCrlfAccepted) {
  std::istringstream in("\xEF\xBB\xBFtimestamp,price\r\n2021-01-01T00,0.5\r\n2021-01-01T01,-0.1\r\n");
  const auto s = read_prices(in, PriceUnit::PerKwh);
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_DOUBLE_EQ(s.values[1], -0.1);  // negative prices are legitimate
}

TEST(Demand, RejectsNegative) {
  std::istringstream ok("timestamp,kwh\n2021-01-01T00,1.5\n2021-01-01T01,0\n");
  EXPECT_EQ(read_demand(ok).values.size(), 2u);
  std::istringstream bad("timestamp,kwh\n2021-01-01T00,1.5\n2021-01-01T01,-1\n");
  EXPECT_THROW(read_demand(bad), IngestError);
}

TEST(Forecast, OneIssueDayOneTrajectory) {
  std::istringstream in(forecast_csv({"2020-01-01T00"}, 120, {}));
  const auto f = read_forecast_errors(in);
  ASSERT_EQ(f.trajectories.size(), 1u);
  ASSERT_EQ(f.trajectories[0].size(), 120u);
  for (double e : f.trajectories[0]) EXPECT_EQ(e, 0.0);  // forecast equals actual
  EXPECT_TRUE(f.warnings.empty());
}

TEST(Forecast, ErrorIsForecastMinusActual) {
  std::istringstream in(
      "issue_time,horizon_hours,forecast,actual\n"
      "2020-01-01T00,2,40,30\n2020-01-01T00,1,10,20\n");
  const auto f = read_forecast_errors(in, PriceUnit::PerMwh);
  ASSERT_EQ(f.trajectories.size(), 1u);
  EXPECT_NEAR(f.trajectories[0][0], -0.01, 1e-15);
  EXPECT_NEAR(f.trajectories[0][1], 0.01, 1e-15);
}

TEST(Forecast, IncompleteTrajectoryDroppedWithWarning) {
  std::string csv = forecast_csv({"2020-01-01T00", "2020-01-02T00"}, 4, {});
  // remove horizon 3 of the second issue
  const auto pos = csv.find("2020-01-02T00,3,");
  csv.erase(pos, csv.find('\n', pos) - pos + 1);
  std::istringstream in(csv);
  const auto f = read_forecast_errors(in);
  ASSERT_EQ(f.trajectories.size(), 1u);
  EXPECT_EQ(f.issue_times[0], "2020-01-01T00");
  ASSERT_EQ(f.warnings.size(), 1u);
  EXPECT_NE(f.warnings[0].find("2020-01-02T00"), std::string::npos);
}

TEST(Forecast, RejectsBadHorizonsAndDuplicates) {
  std::istringstream h0("issue_time,horizon_hours,forecast,actual\n2020-01-01T00,0,1,1\n");
  EXPECT_THROW(read_forecast_errors(h0), IngestError);
  std::istringstream h121("issue_time,horizon_hours,forecast,actual\n2020-01-01T00,121,1,1\n");
  EXPECT_THROW(read_forecast_errors(h121), IngestError);
  std::istringstream dup("issue_time,horizon_hours,forecast,actual\n2020-01-01T00,1,1,1\n2020-01-01T00,1,2,1\n");
  EXPECT_THROW(read_forecast_errors(dup), IngestError);
  std::istringstream frac("issue_time,horizon_hours,forecast,actual\n2020-01-01T00,1.5,1,1\n");
  EXPECT_THROW(read_forecast_errors(frac), IngestError);
}

TEST(Forecast, SyntheticOuFileCalibratesBack) {
  const OuParams truth{0.3331, 0.004, 1.0};
  std::vector<std::string> issues;
  std::vector<std::vector<double>> errs;
  for (int day = 0; day < 200; ++day) {
    auto rng = make_stream(2024, 0, day);
    // horizon h holds X_h; X_0 = 0 is the known present
    const auto path = simulate_ou(truth, 121, rng);
    issues.push_back(issue_stamp(day));
    errs.emplace_back(path.values.begin() + 1, path.values.end());
  }
  const auto dir = std::filesystem::temp_directory_path() / "storopt_io_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "errors.csv";
  {
    std::ofstream out(file);
    out << forecast_csv(issues, 120, errs);
  }
  const auto f = ingest_forecast_errors(file);
  ASSERT_EQ(f.trajectories.size(), 200u);
  std::vector<std::vector<double>> with_origin;
  for (const auto& t : f.trajectories) {
    std::vector<double> v{0.0};
    v.insert(v.end(), t.begin(), t.end());
    with_origin.push_back(std::move(v));
  }
  const auto cal = calibrate_ou(with_origin);
  EXPECT_NEAR(cal.params.theta, truth.theta, 0.10 * truth.theta);
  EXPECT_NEAR(cal.params.diffusion, truth.diffusion, 0.15 * truth.diffusion);
  std::filesystem::remove_all(dir);
}

TEST(Json, InstanceRoundTrip) {
  const ChainLpInstance inst{{0.1, -0.2, 0.3}, {1, 2, 3}, {11, 12, 13}, {15, 15, 15}, 0.9981};
  const auto back = instance_from_json(nlohmann::json::parse(instance_to_json(inst).dump()));
  EXPECT_EQ(back.costs, inst.costs);
  EXPECT_EQ(back.lower, inst.lower);
  EXPECT_EQ(back.upper, inst.upper);
  EXPECT_EQ(back.charge_cap, inst.charge_cap);
  EXPECT_EQ(back.retention, inst.retention);
  auto j = instance_to_json(inst);
  j["upper"] = {11, 12};
  EXPECT_ANY_THROW(instance_from_json(j));
}

TEST(Json, OuRoundTripAndValidation) {
  const OuParams p{0.25, 0.003, 0.5};
  const auto back = ou_from_json(ou_to_json(p));
  EXPECT_EQ(back.theta, p.theta);
  EXPECT_EQ(back.diffusion, p.diffusion);
  EXPECT_EQ(back.dt, p.dt);
  EXPECT_ANY_THROW(ou_from_json(nlohmann::json{{"theta", -1.0}}));
}

TEST(Json, ConfigRoundTrip) {
  RunConfig c;
  c.command = "sweep";
  c.seed = 77;
  c.seed_given = true;
  c.prices_csv = "p.csv";
  c.controller.window = 48;
  c.controller.measure = Measure::parse("quantile:0.9");
  c.controller.extension = 0;
  c.sweep.deltas = {0.5, 1.0};
  c.sweep.methods = {Method::Minmax};
  c.sweep.repeats = 3;
  c.threads = 2;
  const auto j = config_to_json(c);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(config_to_json(back).dump(), j.dump());
  EXPECT_TRUE(back.seed_given);
  EXPECT_EQ(back.controller.window, 48u);
  EXPECT_EQ(back.controller.extension, 0u);
}

TEST(Config, Validation) {
  RunConfig c;
  c.command = "rollout";
  EXPECT_THROW(c.validate(), std::invalid_argument);  // stochastic without a seed
  c.seed_given = true;
  EXPECT_NO_THROW(c.validate());
  c.instance_json = "i.json";
  c.prices_csv = "p.csv";
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.prices_csv.reset();
  c.method = "lucky";
  EXPECT_THROW(c.validate(), std::invalid_argument);
  RunConfig solve;
  solve.command = "solve";
  EXPECT_NO_THROW(solve.validate());  // deterministic, no seed needed
}

TEST(Output, ScheduleCsvLevels) {
  const ChainLpInstance inst{{1, 2}, {0, 0}, {10, 10}, {5, 5}, 0.5};
  std::ostringstream os;
  write_schedule_csv(os, inst, {4, 2}, {1, 2});
  std::istringstream in(os.str());
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_EQ(header, "step,timestamp,x_kwh,level_kwh,price_eur_per_kwh");
  EXPECT_EQ(r2.substr(0, 2), "2,");
  EXPECT_NE(r2.find(",4,"), std::string::npos) << r2;  // level 0.5 * 4 + 2
}
