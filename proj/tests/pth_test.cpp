#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "storopt/pth.hpp"

using namespace storopt;

namespace {

HouseholdSpec spec_with(double q, double capacity) {
  HouseholdSpec s;
  s.retention = q;
  // capacity = days * annual / 365
  s.annual_heat_demand = 365.0;
  s.capacity_days = capacity;
  s.max_charge_power = 15.0;
  return s;
}

}  // namespace

TEST(Household, DefaultCapacityIs8828) {
  const HouseholdSpec s;
  EXPECT_NEAR(s.capacity(), 88.28, 0.005);
  EXPECT_DOUBLE_EQ(s.capacity(), 3.0 * 10741.15 / 365.0);
}

TEST(Household, AnnualDemandFromAreaWhenUnset) {
  HouseholdSpec s;
  s.annual_heat_demand.reset();
  s.living_area = 100.0;
  s.specific_demand = 100.0;
  EXPECT_DOUBLE_EQ(s.annual_demand(), 10000.0);
}

TEST(Household, InconsistentAreaAndAnnualRejected) {
  HouseholdSpec s;
  s.living_area = 100.0;
  s.specific_demand = 100.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Household, BadParametersRejected) {
  HouseholdSpec s;
  s.retention = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = HouseholdSpec{};
  s.efficiency = 0.9;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = HouseholdSpec{};
  s.max_charge_power = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = HouseholdSpec{};
  s.annual_heat_demand.reset();
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(BuildInstance, PlainCumulativeSum) {
  const auto inst = build_instance({{1, 1, 1}}, spec_with(1.0, 10.0), std::vector<double>{0.1, 0.2, 0.3});
  EXPECT_EQ(inst.lower, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(inst.upper, (std::vector<double>{11, 12, 13}));
  EXPECT_EQ(inst.charge_cap, (std::vector<double>{15, 15, 15}));
  EXPECT_EQ(inst.costs, (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_DOUBLE_EQ(inst.retention, 1.0);
}

TEST(BuildInstance, DiscountedSum) {
  const auto inst = build_instance({{2, 2}}, spec_with(0.5, 4.0), std::vector<double>{1, 1});
  EXPECT_DOUBLE_EQ(inst.lower[0], 2.0);
  EXPECT_DOUBLE_EQ(inst.lower[1], 3.0);
  EXPECT_DOUBLE_EQ(inst.upper[0], 6.0);
  EXPECT_DOUBLE_EQ(inst.upper[1], 7.0);
}

TEST(BuildInstance, DemandSpikeBeyondDeliverableEnergyIsInfeasible) {
  auto spec = spec_with(1.0, 1.0);  // C = 1, P = 15
  try {
    build_instance({{1, 1, 40}}, spec, std::vector<double>{1, 1, 1});
    FAIL() << "expected Infeasible";
  } catch (const Infeasible& e) {
    EXPECT_EQ(e.index, 3u);
  }
}

TEST(BuildInstance, RejectsNegativeDemandAndLengthMismatch) {
  EXPECT_THROW(build_instance({{1, -1}}, spec_with(1.0, 1.0), std::vector<double>{1, 1}),
               std::invalid_argument);
  EXPECT_THROW(build_instance({{1, 1}}, spec_with(1.0, 1.0), std::vector<double>{1}),
               std::invalid_argument);
}

TEST(BuildInstance, LowerNeverAboveUpper) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 100;
    DemandSeries d;
    for (std::size_t i = 0; i < n; ++i) d.kwh.push_back(3.0 * unit(rng));
    HouseholdSpec s;
    s.retention = 0.9 + 0.1 * unit(rng);
    const auto inst = build_instance(d, s, std::vector<double>(n, 0.1));
    for (std::size_t i = 0; i < n; ++i) EXPECT_LE(inst.lower[i], inst.upper[i]);
  }
}

// Any feasible schedule keeps the physical store S = y - a inside [0, C].
TEST(BuildInstance, RoundTripStoreStaysInCapacity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 24 + rng() % 72;
    const auto demand = synth_demand(n, 10741.15, DemandProfile{}, rng());
    HouseholdSpec s;
    const auto inst = build_instance(demand, s, std::vector<double>(n, 0.0));
    // random admissible schedule: charge uniformly inside the step window
    std::vector<double> x(n);
    double y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = std::max(0.0, inst.lower[i] - s.retention * y);
      const double hi = std::min(inst.charge_cap[i], inst.upper[i] - s.retention * y);
      ASSERT_LE(lo, hi + 1e-9);
      x[i] = lo + (hi - lo) * unit(rng);
      y = s.retention * y + x[i];
    }
    ASSERT_TRUE(schedule_feasible(inst, x));
    // independent storage simulation S_i = q S_{i-1} + x_i - d_i
    double store = 0.0;
    const double eps = 1e-9 * std::max(1.0, s.capacity()) * 10;
    for (std::size_t i = 0; i < n; ++i) {
      store = s.retention * store + x[i] - demand.kwh[i];
      EXPECT_GE(store, -eps);
      EXPECT_LE(store, s.capacity() + eps);
    }
  }
}

TEST(SynthDemand, FlatProfileIsConstant) {
  DemandProfile p;
  p.noise = 0.0;
  p.seasonal_amplitude = 0.0;
  p.daily_shape.fill(1.0);
  const auto d = synth_demand(48, 8760.0, p, 1);
  for (double v : d.kwh) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(SynthDemand, SumMatchesTarget) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 24 + seed * 100;
    const auto d = synth_demand(n, 10741.15, DemandProfile{}, seed);
    ASSERT_EQ(d.kwh.size(), n);
    const double total = std::accumulate(d.kwh.begin(), d.kwh.end(), 0.0);
    const double target = 10741.15 * static_cast<double>(n) / 8760.0;
    EXPECT_NEAR(total, target, 1e-6 * target);
    for (double v : d.kwh) EXPECT_GE(v, 0.0);
  }
}

TEST(SynthDemand, Reproducible) {
  const auto a = synth_demand(500, 10741.15, DemandProfile{}, 42);
  const auto b = synth_demand(500, 10741.15, DemandProfile{}, 42);
  const auto c = synth_demand(500, 10741.15, DemandProfile{}, 43);
  EXPECT_EQ(a.kwh, b.kwh);
  EXPECT_NE(a.kwh, c.kwh);
}

TEST(SynthDemand, RejectsShortOrNonPositive) {
  EXPECT_THROW(synth_demand(23, 100.0, DemandProfile{}, 0), std::invalid_argument);
  EXPECT_THROW(synth_demand(48, 0.0, DemandProfile{}, 0), std::invalid_argument);
}

TEST(SynthDemand, FullYearFitsTheDefaultHousehold) {
  const auto d = synth_demand(8760, 10741.15, DemandProfile{}, 3);
  const HouseholdSpec s;
  for (double v : d.kwh) EXPECT_LE(v, s.max_charge_power);
  EXPECT_NO_THROW(build_instance(d, s, std::vector<double>(8760, 0.05)));
}
