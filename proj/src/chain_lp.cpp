#include "storopt/chain_lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace storopt {

namespace {

// Breakpoints closer than this (kWh) are merged.
constexpr double kCollapse = 1e-12;

// One linear piece of a convex value function: `len` kWh at `slope` EUR/kWh.
struct Segment {
  double len;
  double slope;
};

// Scratch buffers reused across calls on the same thread.
struct Workspace {
  std::vector<Segment> cur;
  std::vector<Segment> next;
  std::vector<double> argmin_lo;
  std::vector<double> argmin_hi;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void push_segment(std::vector<Segment>& out, double len, double slope) {
  if (len < kCollapse) return;
  if (!out.empty()) {
    Segment& last = out.back();
    if (slope == last.slope) {
      last.len += len;
      return;
    }
    if (slope < last.slope) {
      std::ostringstream os;
      os << "value function lost convexity (slope " << slope << " after " << last.slope << ")";
      throw InternalConsistency(os.str());
    }
  }
  out.push_back({len, slope});
}

std::string step_message(const char* what, std::size_t index) {
  std::ostringstream os;
  os << what << " at step " << index;
  return os.str();
}

}  // namespace

double constraint_slack(double bound) { return 1e-9 * std::max(1.0, std::abs(bound)); }

void check_structure(const ChainLpInstance& inst) {
  const std::size_t n = inst.costs.size();
  if (inst.lower.size() != n || inst.upper.size() != n || inst.charge_cap.size() != n) {
    throw InvalidInstance("instance vectors differ in length");
  }
  if (!(inst.retention > 0.0 && inst.retention <= 1.0)) {
    throw InvalidInstance("retention factor must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(inst.costs[i]) || !std::isfinite(inst.lower[i]) ||
        !std::isfinite(inst.upper[i]) || !std::isfinite(inst.charge_cap[i])) {
      throw InvalidInstance(step_message("non-finite entry", i + 1));
    }
    if (inst.lower[i] > inst.upper[i]) throw InvalidInstance(step_message("lower > upper", i + 1));
    if (inst.charge_cap[i] < 0.0) throw InvalidInstance(step_message("negative charge cap", i + 1));
  }
}

FeasibilityReport check_feasible(const ChainLpInstance& inst) {
  check_structure(inst);
  const double q = inst.retention;
  double max_level = 0.0;     // forward max-level envelope
  double forced_level = 0.0;  // forced min-level envelope
  for (std::size_t i = 0; i < inst.size(); ++i) {
    max_level = std::min(inst.upper[i], q * max_level + inst.charge_cap[i]);
    forced_level = std::max(inst.lower[i], q * forced_level);
    if (max_level < inst.lower[i] - constraint_slack(inst.lower[i]) ||
        forced_level > inst.upper[i] + constraint_slack(inst.upper[i])) {
      return {false, i + 1};
    }
  }
  return {};
}

ChargeSchedule solve_chain(const ChainLpInstance& inst) { return solve_chain(inst, inst.costs); }

ChargeSchedule solve_chain(const ChainLpInstance& bounds, std::span<const double> costs) {
  const std::size_t n = bounds.lower.size();
  if (costs.size() != n || bounds.upper.size() != n || bounds.charge_cap.size() != n) {
    throw InvalidInstance("instance vectors differ in length");
  }
  const double q = bounds.retention;
  if (!(q > 0.0 && q <= 1.0)) throw InvalidInstance("retention factor must lie in (0, 1]");

  Workspace& ws = workspace();
  ws.cur.clear();
  ws.argmin_lo.resize(n);
  ws.argmin_hi.resize(n);

  // F_0 is the single point y = 0. F_i is stored as its left end `x0`
  // followed by segments of nondecreasing slope.
  double x0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = costs[i];
    const double cap = bounds.charge_cap[i];

    // H(z) = F_{i-1}(z / q) - c z, with z = q y_{i-1} the decayed level.
    x0 *= q;
    double total = 0.0;
    double argmin = x0;
    double flat = 0.0;
    std::size_t first_flat = ws.cur.size();
    std::size_t first_rising = ws.cur.size();
    for (std::size_t k = 0; k < ws.cur.size(); ++k) {
      Segment& s = ws.cur[k];
      if (q != 1.0) {
        s.len *= q;
        s.slope = s.slope / q - c;
      } else {
        s.slope -= c;
      }
      total += s.len;
      if (s.slope < 0.0) {
        argmin += s.len;
      } else if (s.slope == 0.0) {
        if (first_flat == ws.cur.size()) first_flat = k;
        flat += s.len;
      } else if (first_rising == ws.cur.size()) {
        first_rising = k;
      }
    }
    if (first_flat > first_rising) first_flat = first_rising;
    ws.argmin_lo[i] = argmin;
    ws.argmin_hi[i] = argmin + flat;

    // M(y) = min_{z in [y - cap, y]} H(z): the falling part of H, a flat
    // stretch widened by cap, then the rising part shifted right by cap.
    const double end = x0 + total + cap;
    double lo = std::max(x0, bounds.lower[i]);
    double hi = std::min(end, bounds.upper[i]);
    if (lo > hi) {
      if (lo > hi + constraint_slack(bounds.upper[i]) + constraint_slack(bounds.lower[i])) {
        throw Infeasible(i + 1, step_message("storage instance infeasible", i + 1));
      }
      lo = hi = std::clamp(bounds.upper[i], x0, end);
    }

    // Clip M to [lo, hi] and add c y.
    ws.next.clear();
    double pos = x0;
    auto emit = [&](double len, double slope) {
      const double from = std::max(pos, lo);
      const double to = std::min(pos + len, hi);
      pos += len;
      if (to > from) push_segment(ws.next, to - from, slope + c);
    };
    for (std::size_t k = 0; k < first_flat && pos < hi; ++k) emit(ws.cur[k].len, ws.cur[k].slope);
    if (pos < hi) emit(flat + cap, 0.0);
    for (std::size_t k = first_rising; k < ws.cur.size() && pos < hi; ++k) {
      emit(ws.cur[k].len, ws.cur[k].slope);
    }
    x0 = lo;
    std::swap(ws.cur, ws.next);
  }

  // Backward pass: smallest minimiser of F_n, then for every step the
  // smallest decayed level inside the transition window closest to argmin H.
  ChargeSchedule out;
  out.x.assign(n, 0.0);
  double y = x0;
  for (const Segment& s : ws.cur) {
    if (s.slope >= 0.0) break;
    y += s.len;
  }
  for (std::size_t i = n; i-- > 0;) {
    const double cap = bounds.charge_cap[i];
    const double z = std::clamp(ws.argmin_lo[i], y - cap, y);
    out.x[i] = std::clamp(y - z, 0.0, cap);
    y = (q != 1.0) ? z / q : z;
  }

  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) obj += costs[i] * out.x[i];
  out.objective = obj;
  return out;
}

double objective(const ChainLpInstance& inst, std::span<const double> x) {
  if (x.size() != inst.size()) throw InvalidInstance("schedule length does not match instance");
  double obj = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) obj += inst.costs[i] * x[i];
  return obj;
}

std::vector<double> level_trajectory(const ChainLpInstance& inst, std::span<const double> x) {
  if (x.size() != inst.size()) throw InvalidInstance("schedule length does not match instance");
  std::vector<double> y(x.size());
  double level = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    level = inst.retention * level + x[i];
    y[i] = level;
  }
  return y;
}

bool schedule_feasible(const ChainLpInstance& inst, std::span<const double> x,
                       std::size_t* violation) {
  const std::vector<double> y = level_trajectory(inst, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eps = constraint_slack(inst.upper[i]);
    const bool ok = x[i] >= -constraint_slack(inst.charge_cap[i]) &&
                    x[i] <= inst.charge_cap[i] + constraint_slack(inst.charge_cap[i]) &&
                    y[i] >= inst.lower[i] - eps && y[i] <= inst.upper[i] + eps;
    if (!ok) {
      if (violation) *violation = i + 1;
      return false;
    }
  }
  return true;
}

ChargeSchedule latest_moment_schedule(const ChainLpInstance& inst) {
  const FeasibilityReport rep = check_feasible(inst);
  if (!rep.feasible) {
    throw Infeasible(rep.first_violation, step_message("storage instance infeasible", rep.first_violation));
  }
  const std::size_t n = inst.size();
  const double q = inst.retention;
  // need[i]: smallest level at step i that still lets every later lower
  // bound be met under the charge caps.
  std::vector<double> need(n);
  for (std::size_t i = n; i-- > 0;) {
    need[i] = inst.lower[i];
    if (i + 1 < n) need[i] = std::max(need[i], (need[i + 1] - inst.charge_cap[i + 1]) / q);
  }
  ChargeSchedule out;
  out.x.resize(n);
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = std::max(need[i], q * level);
    out.x[i] = std::clamp(next - q * level, 0.0, inst.charge_cap[i]);
    level = q * level + out.x[i];
  }
  out.objective = objective(inst, out.x);
  return out;
}

}  // namespace storopt
