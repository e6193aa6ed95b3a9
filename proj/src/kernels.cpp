#include "storopt/kernels.hpp"

#include <exception>
#include <vector>

#include <omp.h>

namespace storopt::kernels {

namespace {

int team_size(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

void scenario_first_steps_serial(const ChainLpInstance& window, const ScenarioSource& source,
                                 std::size_t k, std::span<const double> realized,
                                 std::span<double> first) {
  std::vector<double> costs(window.size());
  for (std::size_t j = 0; j < first.size(); ++j) {
    source.fill(k, j, realized, costs);
    first[j] = solve_chain(window, costs).x.front();
  }
}

void scenario_first_steps_omp(const ChainLpInstance& window, const ScenarioSource& source,
                              std::size_t k, std::span<const double> realized,
                              std::span<double> first, int threads) {
  const auto m = static_cast<std::ptrdiff_t>(first.size());
  std::exception_ptr failure;
#pragma omp parallel num_threads(team_size(threads))
  {
    std::vector<double> costs(window.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      try {
        source.fill(k, static_cast<std::size_t>(j), realized, costs);
        first[static_cast<std::size_t>(j)] = solve_chain(window, costs).x.front();
      } catch (...) {
#pragma omp critical(storopt_kernel_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void fill_scenarios_serial(const ScenarioSource& source, std::size_t k,
                           std::span<const double> realized, PriceScenarioSet& out) {
  for (std::size_t j = 0; j < out.count; ++j) source.fill(k, j, realized, out.scenario(j));
}

void fill_scenarios_omp(const ScenarioSource& source, std::size_t k,
                        std::span<const double> realized, PriceScenarioSet& out, int threads) {
  const auto m = static_cast<std::ptrdiff_t>(out.count);
#pragma omp parallel for schedule(static) num_threads(team_size(threads))
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    source.fill(k, static_cast<std::size_t>(j), realized, out.scenario(static_cast<std::size_t>(j)));
  }
}

}  // namespace storopt::kernels
