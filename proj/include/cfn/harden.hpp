#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cfn/gm.hpp"
#include "cfn/tasks.hpp"

namespace cfn {

/* Pairwise costs below t become 0, costs at or above t become top; unary
 * costs are untouched.  Idempotent for any t <= top. */
Gm threshold(const Gm& gm, double t);

struct HardenOptions {
    /* Consulted after every batch of hardenings (and at the very end); a
     * false return means the latest batch introduced a contradiction, which
     * is then located by bisection: the offending hardening is reverted and
     * the procedure stops. */
    std::function<bool(const Gm&)> feasibility_check;
    int check_every = 100;
};

struct HardenResult {
    Gm gm;
    std::int64_t hardened = 0;     // entries set to top
    std::int64_t reverted = 0;     // entries rolled back after a contradiction
    bool stopped_on_contradiction = false;
};

/* Turns learned soft costs into hard constraints: pairwise entries with
 * cost > 0 are visited in strictly decreasing cost order (ties broken by
 * (i,j,a,b)) and set to top iff no training solution uses that value pair.
 * Entries used by any training solution are never touched, so every
 * training solution keeps a finite cost by construction. */
HardenResult harden(const Gm& gm, const std::vector<Assignment>& training_solutions,
                    const HardenOptions& options = {});

struct ConstraintReport {
    std::int64_t forbidden_tuples = 0;        // entries at top across all pairs
    std::int64_t pairs_with_constraints = 0;  // pairs containing at least one top
    // against a reference pattern:
    std::int64_t exact_pairs = 0;    // reference pairs whose forbidden set matches exactly
    std::int64_t missed_pairs = 0;   // reference pairs with missing forbidden tuples
    std::int64_t false_pairs = 0;    // pairs with forbidden tuples outside the reference
    std::int64_t false_tuples = 0;   // individual forbidden tuples outside the reference
    std::int64_t missed_tuples = 0;  // reference tuples not forbidden
    std::string summary() const;
};

/* Counts hard-forbidden tuples; when a reference pattern is given, scores
 * the prediction against it at both pair and tuple granularity. */
ConstraintReport constraint_report(const Gm& gm, const ReferencePattern* reference = nullptr);

}  // namespace cfn
