#include "cfn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfn {

MaskSet sample_masks(int n, int k, Rng& rng) {
    if (k < 0 || k > n - 1) throw std::invalid_argument("sample_masks: k must be in [0, n-1]");
    MaskSet ms;
    ms.holes.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) ms.holes[std::size_t(i)] = rng.subset_excluding(n, k, i);
    return ms;
}

MaskSet sample_masks_fraction(int n, double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("sample_masks_fraction: fraction must be in [0,1]");
    const int k = int(std::lround(fraction * double(n - 1)));
    return sample_masks(n, k, rng);
}

LossGradients LossGradients::zeros_like(const Gm& gm) {
    LossGradients g;
    g.d_unary.resize(std::size_t(gm.n()));
    for (int i = 0; i < gm.n(); ++i)
        g.d_unary[std::size_t(i)].assign(std::size_t(gm.domain(i)), 0.0);
    for (const auto& [key, m] : gm.pairs())
        g.d_pairs.emplace(key, Matrix(m.rows, m.cols));
    return g;
}

void LossGradients::add_scaled(const LossGradients& other, double scale) {
    for (std::size_t i = 0; i < d_unary.size(); ++i)
        for (std::size_t v = 0; v < d_unary[i].size(); ++v)
            d_unary[i][v] += scale * other.d_unary[i][v];
    auto it = d_pairs.begin();
    auto ot = other.d_pairs.begin();
    for (; it != d_pairs.end(); ++it, ++ot)
        for (std::size_t e = 0; e < it->second.v.size(); ++e)
            it->second.v[e] += scale * ot->second.v[e];
}

static void check_scope(const Gm& gm, const Assignment& y, const std::vector<int>& scope) {
    if (int(y.size()) != gm.n()) throw std::invalid_argument("loss: assignment length mismatch");
    for (int i : scope)
        if (i < 0 || i >= gm.n()) throw std::invalid_argument("loss: scope variable out of range");
}

/* One conditional term in log-sum-exp form.  m is consumed as scratch. */
static double nll_term(std::vector<double>& m, int yi) {
    const double lo = *std::min_element(m.begin(), m.end());
    double z = 0.0;
    for (double e : m) z += std::exp(-(e - lo));
    return (m[std::size_t(yi)] - lo) + std::log(z);
}

double epll(const Gm& gm, const Assignment& y, const MaskSet& masks,
            const std::vector<int>& scope) {
    check_scope(gm, y, scope);
    if (masks.n() != gm.n()) throw std::invalid_argument("epll: mask count mismatch");
    double total = 0.0;
    for (int i : scope) {
        std::vector<double> m = messages(gm, y, i, masks.holes[std::size_t(i)]);
        total += nll_term(m, y[std::size_t(i)]);
    }
    return total;
}

double npll(const Gm& gm, const Assignment& y, const std::vector<int>& scope) {
    return epll(gm, y, MaskSet::empty(gm.n()), scope);
}

/* d(term_i)/d(m_i(v)) = 1(v = y_i) - P(v | y_-i); the chain rule into a
 * pair {i,j} touches only the column at y_j (and the row at y_i for the
 * term of j).  Terms of muted neighbors contribute nothing. */
LossGradients epll_grad(const Gm& gm, const Assignment& y, const MaskSet& masks,
                        const std::vector<int>& scope) {
    check_scope(gm, y, scope);
    if (masks.n() != gm.n()) throw std::invalid_argument("epll_grad: mask count mismatch");
    LossGradients g = LossGradients::zeros_like(gm);
    for (int i : scope) {
        const auto& holes = masks.holes[std::size_t(i)];
        const std::vector<double> p = conditional_distribution(gm, y, i, holes);
        const int d = gm.domain(i);
        const int yi = y[std::size_t(i)];
        auto& du = g.d_unary[std::size_t(i)];
        for (int v = 0; v < d; ++v) du[std::size_t(v)] += ((v == yi) ? 1.0 : 0.0) - p[std::size_t(v)];
        for (const auto& inc : gm.incident(i)) {
            const int j = inc.other;
            if (std::binary_search(holes.begin(), holes.end(), j)) continue;
            const int yj = y[std::size_t(j)];
            Matrix& dm = g.d_pairs.at({std::min(i, j), std::max(i, j)});
            if (i < j) {
                for (int v = 0; v < d; ++v)
                    dm.at(v, yj) += ((v == yi) ? 1.0 : 0.0) - p[std::size_t(v)];
            } else {
                for (int v = 0; v < d; ++v)
                    dm.at(yj, v) += ((v == yi) ? 1.0 : 0.0) - p[std::size_t(v)];
            }
        }
    }
    return g;
}

LossGradients npll_grad(const Gm& gm, const Assignment& y, const std::vector<int>& scope) {
    return epll_grad(gm, y, MaskSet::empty(gm.n()), scope);
}

double total_loss(const Gm& gm, const Assignment& y, const MaskSet& masks,
                  const std::vector<int>& scope, double l1_weight) {
    double l1 = 0.0;
    for (const auto& [key, m] : gm.pairs()) {
        (void)key;
        for (double c : m.v) l1 += std::abs(c);
    }
    return epll(gm, y, masks, scope) + l1_weight * l1;
}

std::pair<double, LossGradients> total_loss_and_grad(const Gm& gm, const Assignment& y,
                                                     const MaskSet& masks,
                                                     const std::vector<int>& scope,
                                                     double l1_weight) {
    LossGradients g = epll_grad(gm, y, masks, scope);
    double l1 = 0.0;
    for (auto& [key, dm] : g.d_pairs) {
        const Matrix& m = gm.pairs().at(key);
        for (std::size_t e = 0; e < m.v.size(); ++e) {
            const double c = m.v[e];
            l1 += std::abs(c);
            if (c > 0.0)
                dm.v[e] += l1_weight;
            else if (c < 0.0)
                dm.v[e] -= l1_weight;
        }
    }
    return {epll(gm, y, masks, scope) + l1_weight * l1, std::move(g)};
}

}  // namespace cfn
