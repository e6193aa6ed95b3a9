#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "storopt/chain_lp.hpp"

namespace storopt::validation {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationOptions {
  std::uint64_t seed = 20240601;
  int threads = 0;              // 0: OpenMP default
  bool full = true;             // false skips the desk sweep, sensitivity and full-scale runs
  std::ostream* log = nullptr;  // progress lines
  std::string artifacts_dir;    // sweep reports and timings land here when set
};

/// Runs the acceptance criteria 1..10 and returns one result each, in order.
/// Criteria 2 and 4 audit every schedule and rollout the other criteria produce.
std::vector<CriterionResult> run_acceptance(const ValidationOptions& options);

/// "PASS  3  collapse identity  (detail) [1.2 s]"
std::string format_result(const CriterionResult& r);

/// Feasible by construction: bounds drawn around the level path of a random
/// admissible schedule.
ChainLpInstance random_instance(std::mt19937_64& rng, std::size_t n, double retention);

}  // namespace storopt::validation
