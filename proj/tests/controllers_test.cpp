#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "storopt/controllers.hpp"
#include "storopt/experiments.hpp"
#include "storopt/kernels.hpp"
#include "storopt/minmax.hpp"
#include "test_support.hpp"

using namespace storopt;

namespace {

// Every scenario is the realized price vector.
class EchoSource final : public ScenarioSource {
 public:
  explicit EchoSource(std::size_t m) : m_(m) {}
  std::size_t count() const override { return m_; }
  void fill(std::size_t, std::size_t, std::span<const double> realized, std::span<double> out) const override {
    std::copy(realized.begin(), realized.end(), out.begin());
  }

 private:
  std::size_t m_;
};

ControllerConfig small_config(std::size_t window, std::size_t m, double delta, std::uint64_t seed) {
  ControllerConfig c;
  c.window = window;
  c.scenarios = m;
  c.delta = delta;
  c.seed = seed;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(Measure, MedianOfEvenSampleIsMidpoint) {
  std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(Measure::median().apply(v), 2.5);
  std::vector<double> w{5, 1, 3};
  EXPECT_DOUBLE_EQ(Measure::median().apply(w), 3.0);
}

TEST(Measure, MeanAndQuantile) {
  std::vector<double> v{1, 2, 3, 4, 10};
  EXPECT_DOUBLE_EQ(Measure::mean().apply(v), 4.0);
  std::vector<double> w{0, 10};
  EXPECT_DOUBLE_EQ(Measure::quantile(0.25).apply(w), 2.5);
}

TEST(Measure, IdenticalValuesGiveThatValue) {
  for (const auto& m : {Measure::median(), Measure::mean(), Measure::quantile(0.9)}) {
    std::vector<double> v(7, 1.25);
    EXPECT_DOUBLE_EQ(m.apply(v), 1.25);
  }
}

TEST(Measure, Parse) {
  EXPECT_EQ(Measure::parse("median").kind(), Measure::Kind::Median);
  EXPECT_EQ(Measure::parse("mean").kind(), Measure::Kind::Mean);
  EXPECT_DOUBLE_EQ(Measure::parse("quantile:0.3").probability(), 0.3);
  EXPECT_EQ(Measure::parse("quantile:0.3").name(), "quantile:0.3");
  EXPECT_THROW(Measure::parse("quantile:1"), std::invalid_argument);
  EXPECT_THROW(Measure::parse("quantile:x"), std::invalid_argument);
  EXPECT_THROW(Measure::parse("mode"), std::invalid_argument);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.window = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ControllerConfig{};
  c.scenarios = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ControllerConfig{};
  c.delta = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(ControllerConfig{}.extension_hours(8760), 119u);
  EXPECT_EQ(ControllerConfig{}.extension_hours(120), 0u);  // one window spans everything
  ControllerConfig fixed;
  fixed.extension = 30;
  EXPECT_EQ(fixed.extension_hours(120), 30u);
}

TEST(WindowSubinstance, ZeroCarriedLevelCopiesSteps) {
  std::mt19937_64 rng(3);
  const auto inst = testkit::random_feasible_instance(rng, 8, 0.9);
  const auto sub = build_window_subinstance(inst, 1, 5, 0.0);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_DOUBLE_EQ(sub.lower[t], std::max(0.0, inst.lower[t]));
    EXPECT_DOUBLE_EQ(sub.upper[t], inst.upper[t]);
    EXPECT_DOUBLE_EQ(sub.charge_cap[t], inst.charge_cap[t]);
    EXPECT_DOUBLE_EQ(sub.costs[t], inst.costs[t]);
  }
}

TEST(WindowSubinstance, LinearShiftWithoutDecay) {
  ChainLpInstance inst{{1, 1}, {8, 9}, {20, 20}, {5, 5}, 1.0};
  const auto sub = build_window_subinstance(inst, 1, 2, 5.0);
  EXPECT_DOUBLE_EQ(sub.lower[0], 3.0);
  EXPECT_DOUBLE_EQ(sub.upper[0], 15.0);
}

TEST(WindowSubinstance, DecayedCarriedLevel) {
  ChainLpInstance inst{{1, 1, 1}, {0, 3, 1}, {10, 10, 10}, {5, 5, 5}, 0.5};
  const auto sub = build_window_subinstance(inst, 2, 2, 4.0);
  EXPECT_DOUBLE_EQ(sub.lower[0], 1.0);  // 3 - 0.5 * 4
  EXPECT_DOUBLE_EQ(sub.lower[1], 0.0);  // max(0, 1 - 0.25 * 4)
  EXPECT_DOUBLE_EQ(sub.upper[1], 9.0);
}

TEST(WindowSubinstance, CarriedLevelAboveCapacityIsCorruption) {
  ChainLpInstance inst{{1}, {0}, {2}, {5}, 1.0};
  EXPECT_THROW(build_window_subinstance(inst, 1, 1, 3.0), StateCorruption);
  EXPECT_THROW(build_window_subinstance(inst, 1, 1, -1.0), StateCorruption);
  EXPECT_THROW(build_window_subinstance(inst, 1, 2, 0.0), std::out_of_range);
}

TEST(ExtendHorizon, PeriodicIncrementsAndWidths) {
  const auto sys = make_synthetic_system(48, 4);
  const auto ext = extend_horizon(sys.instance, sys.prices, 30);
  ASSERT_EQ(ext.size(), 78u);
  const double q = sys.instance.retention;
  for (std::size_t t = 48; t < 78; ++t) {
    const std::size_t src = 24 + (t - 48) % 24;
    EXPECT_DOUBLE_EQ(ext.costs[t], sys.prices[src]);
    EXPECT_NEAR(ext.lower[t] - q * ext.lower[t - 1], sys.instance.lower[src] - q * sys.instance.lower[src - 1], 1e-12);
    EXPECT_NEAR(ext.upper[t] - ext.lower[t], sys.instance.upper[src] - sys.instance.lower[src], 1e-12);
  }
  EXPECT_TRUE(check_feasible(ext).feasible);
}

TEST(Rollout, CollapsesToPerfectForesight) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const auto sys = make_synthetic_system(168, rng());
    const auto pf = perfect_foresight(sys.instance);
    const auto cfg = small_config(168, 1, 0.0, rep);  // default extension
    const OuScenarioSource src(cfg.noise, 0.0, 1, rep);
    const auto r = sliding_window_rollout(sys.instance, sys.prices, src, cfg);
    EXPECT_NEAR(r.realized_cost, pf.objective, 1e-6 * std::max(1.0, std::abs(pf.objective)));
    EXPECT_TRUE(schedule_feasible(sys.instance, r.schedule));
  }
}

TEST(Rollout, MinmaxCollapsesToPerfectForesight) {
  const auto sys = make_synthetic_system(72, 8);
  const auto pf = perfect_foresight(sys.instance);
  auto cfg = small_config(72, 1, 0.0, 0);
  cfg.extension = 0;
  const OuScenarioSource src(cfg.noise, 0.0, 1, 0);
  const auto r = minmax_rollout(sys.instance, sys.prices, src, cfg);
  EXPECT_NEAR(r.realized_cost, pf.objective, 1e-6 * std::max(1.0, std::abs(pf.objective)));
}

TEST(Rollout, IdenticalScenariosGiveTheCommonFirstStep) {
  const auto sys = make_synthetic_system(72, 9);
  auto cfg = small_config(24, 9, 0.0, 0);
  const auto r = sliding_window_rollout(sys.instance, sys.prices, EchoSource(9), cfg);
  auto one = cfg;
  one.scenarios = 1;
  const auto r1 = sliding_window_rollout(sys.instance, sys.prices, EchoSource(1), one);
  EXPECT_EQ(r.schedule, r1.schedule);
  for (const auto& s : r.steps) EXPECT_DOUBLE_EQ(s.spread_lo, s.spread_hi);
}

TEST(Rollout, FeasibleAndSandwichedAcrossSeeds) {
  const auto sys = make_synthetic_system(120, 17);
  const double pf = perfect_foresight(sys.instance).objective;
  const double ns = no_storage_cost(sys.demand, sys.prices, sys.instance.charge_cap);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (double delta : {0.0, 0.1, 0.5}) {
      auto cfg = small_config(24, 15, delta, seed);
      const OuScenarioSource src(cfg.noise, delta, 15, seed);
      const auto r = sliding_window_rollout(sys.instance, sys.prices, src, cfg);
      std::size_t bad = 0;
      EXPECT_TRUE(schedule_feasible(sys.instance, r.schedule, &bad)) << "step " << bad;
      EXPECT_LE(pf, r.realized_cost + 1e-9);
      EXPECT_LE(r.realized_cost, ns + 1e-9);
      EXPECT_NEAR(r.realized_cost, testkit::reversed_dot(sys.prices, r.schedule), 1e-9);
    }
  }
}

TEST(Rollout, QuantileMeasuresAreFeasible) {
  const auto sys = make_synthetic_system(96, 23);
  for (const auto& m : {Measure::mean(), Measure::quantile(0.1), Measure::quantile(0.9)}) {
    auto cfg = small_config(24, 11, 1.0, 2);
    cfg.measure = m;
    const OuScenarioSource src(cfg.noise, 1.0, 11, 2);
    const auto r = sliding_window_rollout(sys.instance, sys.prices, src, cfg);
    EXPECT_TRUE(schedule_feasible(sys.instance, r.schedule)) << m.name();
  }
}

TEST(Rollout, MinmaxFeasibleWithSmallGaps) {
  const auto sys = make_synthetic_system(72, 31);
  auto cfg = small_config(24, 12, 1.0, 3);
  const OuScenarioSource src(cfg.noise, 1.0, 12, 3);
  const auto r = minmax_rollout(sys.instance, sys.prices, src, cfg);
  EXPECT_TRUE(schedule_feasible(sys.instance, r.schedule));
  EXPECT_LE(perfect_foresight(sys.instance).objective, r.realized_cost + 1e-9);
  for (const auto& s : r.steps) EXPECT_LE(s.gap, cfg.gap_tol);
}

TEST(Rollout, IndependentOfThreadCount) {
  const auto sys = make_synthetic_system(72, 41);
  auto serial = small_config(24, 16, 1.0, 5);
  auto parallel = serial;
  parallel.threads = 4;
  const OuScenarioSource src(serial.noise, 1.0, 16, 5);
  const auto a = sliding_window_rollout(sys.instance, sys.prices, src, serial);
  const auto b = sliding_window_rollout(sys.instance, sys.prices, src, parallel);
  EXPECT_EQ(a.schedule, b.schedule);
  EXPECT_EQ(a.realized_cost, b.realized_cost);
  const auto c = minmax_rollout(sys.instance, sys.prices, src, serial);
  const auto d = minmax_rollout(sys.instance, sys.prices, src, parallel);
  EXPECT_EQ(c.schedule, d.schedule);
}

TEST(Rollout, InfeasibleInstanceRejected) {
  ChainLpInstance inst{{1, 1}, {0, 20}, {30, 30}, {5, 5}, 1.0};
  const std::vector<double> prices{1, 1};
  const OuScenarioSource src(OuParams{}, 0.0, 1, 0);
  EXPECT_THROW(sliding_window_rollout(inst, prices, src, small_config(2, 1, 0.0, 0)), Infeasible);
}

TEST(Kernels, SerialAndParallelAgree) {
  const auto sys = make_synthetic_system(48, 2);
  const auto w = build_window_subinstance(sys.instance, 1, 48, 0.0);
  const OuScenarioSource src(OuParams{}, 1.0, 33, 9);
  std::vector<double> a(33), b(33);
  kernels::scenario_first_steps_serial(w, src, 0, sys.prices, a);
  kernels::scenario_first_steps_omp(w, src, 0, sys.prices, b, 3);
  EXPECT_EQ(a, b);
  PriceScenarioSet s1{33, 48, std::vector<double>(33 * 48)}, s2 = s1;
  kernels::fill_scenarios_serial(src, 0, sys.prices, s1);
  kernels::fill_scenarios_omp(src, 0, sys.prices, s2, 3);
  EXPECT_EQ(s1.costs, s2.costs);
}

TEST(OuScenarioSource, ZeroDeltaEchoesBase) {
  const OuScenarioSource src(OuParams{}, 0.0, 3, 1);
  const std::vector<double> base{0.1, -0.2, 0.3};
  std::vector<double> out(3);
  src.fill(5, 2, base, out);
  EXPECT_EQ(out, base);
}

TEST(OuScenarioSource, ForecastBaseReplacesRealized) {
  const OuScenarioSource src(OuParams{}, 0.0, 1, 1, {1, 2, 3, 4});
  const std::vector<double> realized{9, 9};
  std::vector<double> out(2);
  src.fill(1, 0, realized, out);
  EXPECT_EQ(out, (std::vector<double>{2, 3}));
  EXPECT_THROW(src.fill(3, 0, realized, out), std::out_of_range);
}

TEST(NoStorage, Examples) {
  const std::vector<double> zero(4, 0.0), caps(4, 15.0), price(4, 0.3), one(4, 1.0);
  EXPECT_DOUBLE_EQ(no_storage_cost(zero, price, caps), 0.0);
  EXPECT_NEAR(no_storage_cost(one, price, caps), 1.2, 1e-12);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> d(30), c(30);
    for (auto& v : d) v = 10 * u(rng);
    for (auto& v : c) v = u(rng) - 0.2;
    EXPECT_NEAR(no_storage_cost(d, c, std::vector<double>(30, 15.0)), testkit::reversed_dot(c, d), 1e-9);
  }
  EXPECT_THROW(no_storage_cost(std::vector<double>{20}, std::vector<double>{1}, std::vector<double>{15}),
               std::invalid_argument);
}

TEST(EvaluateRealized, Examples) {
  ChainLpInstance inst{{1, 1}, {0, 0}, {10, 10}, {5, 5}, 1.0};
  const std::vector<double> prices{0.2, 0.4};
  const auto zero = evaluate_realized(inst, std::vector<double>{0, 0}, prices);
  EXPECT_EQ(zero.cost, 0.0);
  EXPECT_EQ(zero.surplus, 0.0);
  const auto r = evaluate_realized(inst, std::vector<double>{1, 2}, prices);
  EXPECT_NEAR(r.cost, 1.0, 1e-12);
  EXPECT_NEAR(r.final_level, 3.0, 1e-12);
  EXPECT_NEAR(r.surplus, 3.0 * 0.3, 1e-12);
}

TEST(EvaluateRealized, MatchesIndependentRecomputation) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = testkit::random_feasible_instance(rng, 8, 0.99);
    const auto x = solve_chain(inst).x;
    std::vector<double> prices(8);
    for (auto& p : prices) p = u(rng);
    const auto r = evaluate_realized(inst, x, prices);
    EXPECT_NEAR(r.cost, testkit::reversed_dot(prices, x), 1e-9);
    double y = 0.0;
    for (std::size_t i = 0; i < 8; ++i) y = 0.99 * y + x[i];
    double mean = 0.0;
    for (std::size_t i = 8; i-- > 0;) mean += prices[i];
    mean /= 8.0;
    EXPECT_NEAR(r.surplus, std::max(0.0, y - inst.lower.back()) * mean, 1e-9);
  }
}
