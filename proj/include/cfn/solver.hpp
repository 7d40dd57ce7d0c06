#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cfn/gm.hpp"

namespace cfn {

struct SolveResult {
    Assignment assignment;   // empty when nothing below the bound was found
    double cost = 0.0;       // evaluate(gm, assignment); top when infeasible
    bool feasible = false;   // found an assignment with cost < top
    bool proven_optimal = false;
    std::int64_t nodes = 0;
    std::int64_t backtracks = 0;
};

struct SolveLimits {
    std::optional<double> upper_bound;        // search below min(upper_bound, top)
    std::optional<double> time_limit_s;       // wall clock; result flagged non-proven
    std::optional<std::int64_t> node_limit;   // deterministic alternative to a time limit
};

/* Depth-first branch and bound.  Variable order: smallest current domain,
 * ties broken by larger degree then lower index.  Value order: ascending by
 * the value's share of the bound, ties by lower value.  Forward checking
 * removes values whose accumulated cost reaches top.  Directional lower
 * bound: the assigned prefix, plus per unassigned variable the cheapest
 * alive value of (incoming messages from assigned neighbors + per-value row
 * minima of its pairs toward higher-index unassigned variables).  Each pair
 * is counted exactly once, and per-value conditioning keeps the bound tight
 * when costs are negative. */
SolveResult solve(const Gm& gm, const SolveLimits& limits = {});

/* All assignments with cost < cost_bound, up to limit, in search order.
 * The listing is exhaustive iff fewer than limit assignments are returned
 * (search ran to completion).  Assignments with cost >= top never qualify. */
std::vector<Assignment> enumerate(const Gm& gm, double cost_bound, std::size_t limit);

/* Exhaustive scan over the full assignment product space.  Refuses models
 * with more than max_states states.  Ties resolve to the lexicographically
 * smallest assignment, matching the branch-and-bound tie order. */
SolveResult brute_force(const Gm& gm, std::uint64_t max_states = 10'000'000ULL);

/* Optimal completion of a partial assignment: solve(condition(gm, partial)).
 * Throws std::runtime_error when the conditioned model is infeasible. */
Assignment impute(const Gm& gm, const Assignment& partial, const SolveLimits& limits = {});

}  // namespace cfn
