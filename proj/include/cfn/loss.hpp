#pragma once

#include <map>
#include <utility>
#include <vector>

#include "cfn/gm.hpp"
#include "cfn/rng.hpp"

namespace cfn {

/* Per-variable sets of muted context variables.  holes[i] lists, ascending,
 * the neighbors whose incident cost functions are ignored when variable i's
 * conditional is computed.  i itself never appears in holes[i]. */
struct MaskSet {
    std::vector<std::vector<int>> holes;
    int n() const { return int(holes.size()); }
    static MaskSet empty(int n) { return MaskSet{std::vector<std::vector<int>>(std::size_t(n))}; }
};

/* k uniformly random muted neighbors per variable (count mode). */
MaskSet sample_masks(int n, int k, Rng& rng);
/* Fraction mode: per variable, round(fraction * (n-1)) muted neighbors. */
MaskSet sample_masks_fraction(int n, double fraction, Rng& rng);

/* Gradients with the same sparsity layout as the model they were computed
 * on: one vector per variable, one matrix per declared pair (dense over
 * declared pairs, even those whose costs are all zero). */
struct LossGradients {
    std::vector<std::vector<double>> d_unary;
    std::map<std::pair<int, int>, Matrix> d_pairs;

    static LossGradients zeros_like(const Gm& gm);
    void add_scaled(const LossGradients& other, double scale);
};

/* Pseudo-loglikelihood losses.  scope lists the variables whose conditional
 * terms enter the sum (ascending); pass all variables for the plain loss.
 * Each term is computed in log-sum-exp form after subtracting the smallest
 * message, so the result is finite even when messages contain top. */
double npll(const Gm& gm, const Assignment& y, const std::vector<int>& scope);
LossGradients npll_grad(const Gm& gm, const Assignment& y, const std::vector<int>& scope);

/* Masked variant: variable i's conditional is taken on the model with
 * masks.holes[i] muted.  With empty masks this is npll, computed by the
 * identical code path (bit-identical results).  In the gradient, the term
 * of variable i contributes nothing to pairs {i,j} with j muted for i. */
double epll(const Gm& gm, const Assignment& y, const MaskSet& masks,
            const std::vector<int>& scope);
LossGradients epll_grad(const Gm& gm, const Assignment& y, const MaskSet& masks,
                        const std::vector<int>& scope);

/* epll plus l1_weight * sum of |pairwise costs| over declared pairs (unary
 * costs are not penalized).  The gradient adds l1_weight * sign(cost) with
 * sign(0) = 0. */
double total_loss(const Gm& gm, const Assignment& y, const MaskSet& masks,
                  const std::vector<int>& scope, double l1_weight);
std::pair<double, LossGradients> total_loss_and_grad(const Gm& gm, const Assignment& y,
                                                     const MaskSet& masks,
                                                     const std::vector<int>& scope,
                                                     double l1_weight);

}  // namespace cfn
