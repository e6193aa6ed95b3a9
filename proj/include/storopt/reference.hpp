#pragma once

#include "storopt/chain_lp.hpp"

namespace storopt {

/// Desk-scale oracle for solve_chain: tabular DP over a level grid with
/// linear interpolation of the cost-to-go, refined around the incumbent path
/// until successive objectives agree within `tolerance` EUR.
///
/// Refuses instances with more than kReferenceMaxSteps steps.
ChargeSchedule solve_reference(const ChainLpInstance& inst, double tolerance);

inline constexpr std::size_t kReferenceMaxSteps = 8;

}  // namespace storopt
