#include "storopt/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace storopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kInitialGrid = 257;
constexpr int kRefinedGrid = 65;
constexpr int kMaxRounds = 200;

struct Interval {
  double lo;
  double hi;
};

// Grid of levels with the cost-to-go sampled on it.
struct Stage {
  std::vector<double> level;
  std::vector<double> value;

  double interpolate(double y) const {
    if (level.size() == 1) return value[0];
    auto it = std::upper_bound(level.begin(), level.end(), y);
    std::size_t hi = static_cast<std::size_t>(it - level.begin());
    if (hi == 0) hi = 1;
    if (hi == level.size()) hi = level.size() - 1;
    const std::size_t lo = hi - 1;
    const double v0 = value[lo];
    const double v1 = value[hi];
    if (y <= level[lo]) return v0;
    if (y >= level[hi]) return v1;
    if (v0 == kInf || v1 == kInf) return kInf;
    const double w = (y - level[lo]) / (level[hi] - level[lo]);
    return v0 + w * (v1 - v0);
  }
};

// Levels from which the rest of the horizon is still feasible.
std::vector<Interval> feasible_levels(const ChainLpInstance& inst) {
  const std::size_t n = inst.size();
  const double q = inst.retention;
  std::vector<Interval> out(n);
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::max(inst.lower[i], q * lo);
    hi = std::min(inst.upper[i], q * hi + inst.charge_cap[i]);
    out[i] = {lo, std::max(lo, hi)};
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    const Interval& next = out[i + 1];
    out[i].lo = std::max(out[i].lo, (next.lo - inst.charge_cap[i + 1]) / q);
    out[i].hi = std::min(out[i].hi, next.hi / q);
    if (out[i].hi < out[i].lo) out[i].hi = out[i].lo;
  }
  return out;
}

// Levels an optimal vertex can take at each step: every bound, and the start
// level, pushed forward or backward through "charge nothing" and "charge at
// the cap" transitions. Kept in every round so the zoom cannot lose them.
std::vector<std::vector<double>> breakpoint_levels(const ChainLpInstance& inst, const std::vector<Interval>& feasible) {
  const std::size_t n = inst.size();
  const double q = inst.retention;
  auto keep = [&](std::vector<double>& v, std::size_t i) {
    std::vector<double> out;
    for (double y : v) {
      if (y >= feasible[i].lo - 1e-12 && y <= feasible[i].hi + 1e-12) {
        out.push_back(std::clamp(y, feasible[i].lo, feasible[i].hi));
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double x, double y) { return std::abs(x - y) <= 1e-13; }),
              out.end());
    v = std::move(out);
  };
  std::vector<std::vector<double>> fwd(n), bwd(n);
  for (std::size_t i = 0; i < n; ++i) {
    fwd[i] = {inst.lower[i], inst.upper[i]};
    const std::vector<double> prev = i == 0 ? std::vector<double>{0.0} : fwd[i - 1];
    for (double y : prev) {
      fwd[i].push_back(q * y);
      fwd[i].push_back(q * y + inst.charge_cap[i]);
    }
    keep(fwd[i], i);
  }
  for (std::size_t i = n; i-- > 0;) {
    bwd[i] = {inst.lower[i], inst.upper[i]};
    if (i + 1 < n) {
      for (double y : bwd[i + 1]) {
        bwd[i].push_back(y / q);
        bwd[i].push_back((y - inst.charge_cap[i + 1]) / q);
      }
    }
    keep(bwd[i], i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    fwd[i].insert(fwd[i].end(), bwd[i].begin(), bwd[i].end());
    keep(fwd[i], i);
  }
  return fwd;
}

std::vector<double> make_grid(Interval box, int points, double extra, const std::vector<double>& fixed) {
  std::vector<double> g(fixed);
  g.reserve(fixed.size() + static_cast<std::size_t>(points) + 1);
  if (box.hi - box.lo <= 0.0) {
    g.push_back(box.lo);
  } else {
    for (int k = 0; k < points; ++k) {
      g.push_back(box.lo + (box.hi - box.lo) * k / (points - 1));
    }
    g.back() = box.hi;
  }
  if (std::isfinite(extra) && extra >= box.lo && extra <= box.hi) g.push_back(extra);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// Best next level from `prev` at step i, searching the window endpoints and
// every grid point inside the window.
std::pair<double, double> best_move(const ChainLpInstance& inst, std::size_t i, double prev,
                                    const Interval& feasible, const Stage& next) {
  const double q = inst.retention;
  const double lo = std::max({feasible.lo, q * prev, next.level.front()});
  const double hi = std::min({feasible.hi, q * prev + inst.charge_cap[i], next.level.back()});
  if (lo > hi + 1e-12) return {kInf, 0.0};
  const double c = inst.costs[i];
  double best = kInf;
  double arg = lo;
  auto consider = [&](double y) {
    y = std::clamp(y, lo, std::max(lo, hi));
    const double v = c * (y - q * prev) + next.interpolate(y);
    if (v < best) {
      best = v;
      arg = y;
    }
  };
  consider(lo);
  consider(hi);
  auto first = std::lower_bound(next.level.begin(), next.level.end(), lo);
  for (auto it = first; it != next.level.end() && *it <= hi; ++it) consider(*it);
  return {best, arg};
}

}  // namespace

ChargeSchedule solve_reference(const ChainLpInstance& inst, double tolerance) {
  if (inst.size() > kReferenceMaxSteps) {
    throw std::invalid_argument("reference solver is limited to small instances");
  }
  const FeasibilityReport rep = check_feasible(inst);
  if (!rep.feasible) throw Infeasible(rep.first_violation, "storage instance infeasible");
  const std::size_t n = inst.size();
  if (n == 0) return {};

  const std::vector<Interval> feasible = feasible_levels(inst);
  double max_abs_cost = 0.0;
  for (double c : inst.costs) max_abs_cost = std::max(max_abs_cost, std::abs(c));

  const std::vector<std::vector<double>> breakpoints = breakpoint_levels(inst, feasible);
  std::vector<Interval> box = feasible;
  std::vector<double> incumbent(n, std::numeric_limits<double>::quiet_NaN());
  ChargeSchedule best;
  best.objective = kInf;
  double previous = kInf;
  int grid = kInitialGrid;

  std::vector<Stage> stages(n + 1);
  for (int round = 0; round < kMaxRounds; ++round) {
    // stages[i] holds levels after step i; stages[0] is the empty store.
    stages[0].level = {0.0};
    for (std::size_t i = 0; i < n; ++i) stages[i + 1].level = make_grid(box[i], grid, incumbent[i], breakpoints[i]);
    stages[n].value.assign(stages[n].level.size(), 0.0);
    for (std::size_t i = n; i-- > 0;) {
      Stage& here = stages[i];
      here.value.resize(here.level.size());
      for (std::size_t k = 0; k < here.level.size(); ++k) {
        here.value[k] = best_move(inst, i, here.level[k], feasible[i], stages[i + 1]).first;
      }
    }

    // Roll the greedy policy forward and price the path exactly.
    std::vector<double> x(n);
    std::vector<double> path(n);
    double prev = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const auto [v, y] = best_move(inst, i, prev, feasible[i], stages[i + 1]);
      if (v == kInf) {
        ok = false;
        break;
      }
      x[i] = std::clamp(y - inst.retention * prev, 0.0, inst.charge_cap[i]);
      prev = inst.retention * prev + x[i];
      path[i] = prev;
    }
    if (ok && schedule_feasible(inst, x)) {
      const double obj = objective(inst, x);
      if (obj < best.objective) {
        best.objective = obj;
        best.x = x;
        incumbent = path;
      }
    }

    double spacing = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      spacing = std::max(spacing, (box[i].hi - box[i].lo) / (grid - 1));
    }
    const bool converged = std::abs(previous - best.objective) < tolerance &&
                           spacing * std::max(1.0, max_abs_cost) < tolerance;
    if (converged) break;
    previous = best.objective;

    // Shrink boxes around the incumbent; keep the width where the incumbent
    // sits on an artificial box edge so the search can move outward.
    for (std::size_t i = 0; i < n; ++i) {
      const double width = box[i].hi - box[i].lo;
      const double spacing_i = width / (grid - 1);
      const double y = incumbent[i];
      const bool on_edge = (y - box[i].lo < spacing_i && box[i].lo > feasible[i].lo) ||
                           (box[i].hi - y < spacing_i && box[i].hi < feasible[i].hi);
      const double half = on_edge ? width / 2 : width / 8;
      box[i] = {std::max(feasible[i].lo, y - half), std::min(feasible[i].hi, y + half)};
    }
    grid = kRefinedGrid;
  }
  if (best.objective == kInf) throw InternalConsistency("reference solver found no feasible path");
  return best;
}

}  // namespace storopt
