#pragma once

#include <span>

#include "storopt/chain_lp.hpp"
#include "storopt/controllers.hpp"
#include "storopt/ou.hpp"

// Per-window data-parallel kernels. Each has a plain serial version, kept as
// the reference the OpenMP version is tested and benchmarked against.
namespace storopt::kernels {

/// first[j] = first step of the optimal schedule of `window` under scenario j.
void scenario_first_steps_serial(const ChainLpInstance& window, const ScenarioSource& source,
                                 std::size_t k, std::span<const double> realized,
                                 std::span<double> first);
void scenario_first_steps_omp(const ChainLpInstance& window, const ScenarioSource& source,
                              std::size_t k, std::span<const double> realized,
                              std::span<double> first, int threads);

/// Fills every scenario row of `out` (count and window already set).
void fill_scenarios_serial(const ScenarioSource& source, std::size_t k,
                           std::span<const double> realized, PriceScenarioSet& out);
void fill_scenarios_omp(const ScenarioSource& source, std::size_t k,
                        std::span<const double> realized, PriceScenarioSet& out, int threads);

}  // namespace storopt::kernels
