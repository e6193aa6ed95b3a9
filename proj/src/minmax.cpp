#include "storopt/minmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "matrix_game.hpp"
#include "rollout_scaffold.hpp"
#include "storopt/kernels.hpp"

namespace storopt {

namespace {

void check_scenarios(const ChainLpInstance& window, const PriceScenarioSet& s) {
  if (s.count == 0) throw std::invalid_argument("min-max needs at least one scenario");
  if (s.window != window.size() || s.costs.size() != s.count * s.window) {
    throw std::invalid_argument("scenario length does not match the window");
  }
}

double step_one_clamp(const ChainLpInstance& w, double v) {
  const double lo = std::max(0.0, w.lower[0]);
  const double hi = std::max(lo, std::min(w.charge_cap[0], w.upper[0]));
  return std::clamp(v, lo, hi);
}

}  // namespace

MinmaxResult minmax_first_step(const ChainLpInstance& window, const PriceScenarioSet& scenarios,
                               double gap_tol, std::size_t max_iterations) {
  check_structure(window);
  check_scenarios(window, scenarios);
  if (!(gap_tol > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("iteration cap must be at least 1");
  const FeasibilityReport rep = check_feasible(window);
  if (!rep.feasible) throw Infeasible(rep.first_violation, "min-max window infeasible");

  const std::size_t n = window.size();
  const std::size_t m = scenarios.count;
  MinmaxResult out;
  out.x.assign(n, 0.0);
  if (n == 0) return out;

  // Any feasible x has c.x >= sum_i min(0, c_i) min(u_i, b_i); the shift keeps
  // every game entry at least 1.
  double lowest = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = scenarios.scenario(j);
    double lb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lb += std::min(0.0, c[i]) * std::max(0.0, std::min(window.charge_cap[i], window.upper[i]));
    }
    lowest = std::min(lowest, lb);
  }
  detail::MatrixGame game(m, 1.0 - lowest);

  std::vector<std::vector<double>> columns;
  // Weights are queried at a point between the best dual weights found so
  // far and the master's duals, which damps the oscillation of plain
  // cutting planes. A query that fails to price out a useful column falls
  // back to the master duals for one round.
  constexpr double kSmoothing = 0.7;
  std::vector<double> center(m, 1.0 / static_cast<double>(m));
  std::vector<double> master(center);
  std::vector<double> query(center);
  double master_value = std::numeric_limits<double>::infinity();
  bool smooth = false;
  std::vector<double> weighted(n);
  std::vector<double> payoff(m);
  double best_dual = -std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t j = 0; j < m; ++j) {
      query[j] = smooth ? kSmoothing * center[j] + (1.0 - kSmoothing) * master[j] : master[j];
    }
    if (m == 1) {
      std::copy(scenarios.costs.begin(), scenarios.costs.end(), weighted.begin());
    } else {
      std::fill(weighted.begin(), weighted.end(), 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        if (query[j] == 0.0) continue;
        const auto c = scenarios.scenario(j);
        for (std::size_t i = 0; i < n; ++i) weighted[i] += query[j] * c[i];
      }
    }
    ChargeSchedule cand = solve_chain(window, weighted);
    if (cand.objective > best_dual) {
      best_dual = cand.objective;
      center = query;
    }

    double against_master = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto c = scenarios.scenario(j);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += c[i] * cand.x[i];
      payoff[j] = v;
      against_master += master[j] * v;
    }
    const bool mispriced = smooth && !(against_master < master_value - 1e-12 * std::max(1.0, std::abs(master_value)));
    columns.push_back(std::move(cand.x));
    game.add_column(payoff);
    game.solve();
    master = game.row_weights();
    master_value = game.value();
    smooth = !mispriced;

    const std::vector<double>& mu = game.column_weights();
    std::fill(out.x.begin(), out.x.end(), 0.0);
    for (std::size_t t = 0; t < columns.size(); ++t) {
      if (mu[t] == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) out.x[i] += mu[t] * columns[t][i];
    }
    double primal = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const auto c = scenarios.scenario(j);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += c[i] * out.x[i];
      primal = std::max(primal, v);
    }
    out.primal = primal;
    out.dual = best_dual;
    out.gap = std::max(0.0, primal - best_dual) / std::max(1.0, std::abs(best_dual));
    out.iterations = it;
    if (out.gap <= gap_tol) break;
  }

  if (out.gap > 10.0 * gap_tol) {
    std::ostringstream os;
    os << "min-max did not converge: gap " << out.gap << " after " << out.iterations << " iterations";
    throw ConvergenceFailure(out.gap, os.str());
  }
  out.first_step = step_one_clamp(window, out.x[0]);
  return out;
}

double minmax_reference(const ChainLpInstance& window, const PriceScenarioSet& scenarios) {
  check_structure(window);
  check_scenarios(window, scenarios);
  const std::size_t n = window.size();
  const std::size_t m = scenarios.count;
  if (n > kMinmaxReferenceMaxSteps || m > kMinmaxReferenceMaxScenarios) {
    throw std::invalid_argument("minmax_reference is limited to n <= 6 and m <= 5");
  }
  const FeasibilityReport rep = check_feasible(window);
  if (!rep.feasible) throw Infeasible(rep.first_violation, "min-max window infeasible");
  if (n == 0) return 0.0;

  // Rows g . (y, t) <= h over the variables (y_1..y_n, t).
  const std::size_t dim = n + 1;
  std::vector<std::vector<double>> g;
  std::vector<double> h;
  const double q = window.retention;
  auto add = [&](std::vector<double> row, double rhs) {
    g.push_back(std::move(row));
    h.push_back(rhs);
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(dim, 0.0);
    row[i] = -1.0;
    add(row, -window.lower[i]);  // y_i >= a_i
    row[i] = 1.0;
    add(row, window.upper[i]);   // y_i <= b_i
    std::vector<double> step(dim, 0.0);
    step[i] = -1.0;
    if (i > 0) step[i - 1] = q;
    add(step, 0.0);              // x_i >= 0
    for (double& v : step) v = -v;
    add(step, window.charge_cap[i]);  // x_i <= u_i
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = scenarios.scenario(j);
    std::vector<double> row(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) row[i] = c[i] - (i + 1 < n ? q * c[i + 1] : 0.0);
    row[n] = -1.0;
    add(row, 0.0);  // c^j . x <= t
  }

  const std::size_t rows = g.size();
  std::vector<std::size_t> pick(dim);
  for (std::size_t i = 0; i < dim; ++i) pick[i] = i;
  std::vector<double> mat(dim * (dim + 1));
  double best = std::numeric_limits<double>::infinity();

  for (;;) {
    // Solve the square system of the picked rows by Gaussian elimination.
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) mat[r * (dim + 1) + c] = g[pick[r]][c];
      mat[r * (dim + 1) + dim] = h[pick[r]];
    }
    bool singular = false;
    for (std::size_t c = 0; c < dim && !singular; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < dim; ++r) {
        if (std::abs(mat[r * (dim + 1) + c]) > std::abs(mat[p * (dim + 1) + c])) p = r;
      }
      if (std::abs(mat[p * (dim + 1) + c]) < 1e-12) {
        singular = true;
        break;
      }
      if (p != c) {
        for (std::size_t k = 0; k <= dim; ++k) std::swap(mat[c * (dim + 1) + k], mat[p * (dim + 1) + k]);
      }
      for (std::size_t r = c + 1; r < dim; ++r) {
        const double f = mat[r * (dim + 1) + c] / mat[c * (dim + 1) + c];
        if (f == 0.0) continue;
        for (std::size_t k = c; k <= dim; ++k) mat[r * (dim + 1) + k] -= f * mat[c * (dim + 1) + k];
      }
    }
    if (!singular) {
      std::vector<double> z(dim);
      for (std::size_t r = dim; r-- > 0;) {
        double s = mat[r * (dim + 1) + dim];
        for (std::size_t k = r + 1; k < dim; ++k) s -= mat[r * (dim + 1) + k] * z[k];
        z[r] = s / mat[r * (dim + 1) + r];
      }
      bool ok = z[n] < best;
      for (std::size_t r = 0; r < rows && ok; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += g[r][k] * z[k];
        ok = s <= h[r] + constraint_slack(h[r]) * 10.0;
      }
      if (ok) best = z[n];
    }

    // Next combination in lexicographic order.
    std::size_t i = dim;
    while (i > 0 && pick[i - 1] == rows - dim + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t k = i; k < dim; ++k) pick[k] = pick[k - 1] + 1;
  }
  if (!std::isfinite(best)) throw InternalConsistency("no vertex found for a feasible min-max instance");
  return best;
}

RolloutResult minmax_rollout(const ChainLpInstance& full, std::span<const double> realized,
                             const ScenarioSource& source, const ControllerConfig& config) {
  PriceScenarioSet set;
  set.count = source.count();
  return detail::run_rollout(
      full, realized, config,
      [&](std::size_t k, const ChainLpInstance& window, std::span<const double> realized_window,
          StepDiagnostics& diag) {
        set.window = window.size();
        set.costs.resize(set.count * set.window);
        if (config.threads == 1) {
          kernels::fill_scenarios_serial(source, k, realized_window, set);
        } else {
          kernels::fill_scenarios_omp(source, k, realized_window, set, config.threads);
        }
        const MinmaxResult r = minmax_first_step(window, set, config.gap_tol, config.max_iterations);
        diag.gap = r.gap;
        diag.iterations = r.iterations;
        diag.spread_lo = diag.spread_hi = r.first_step;
        return r.first_step;
      });
}

}  // namespace storopt
