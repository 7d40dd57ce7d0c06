#include "cfn/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cfn {

namespace {

struct Arc {
    int other;
    const Matrix* m;
    bool transposed;
    int pair_id;
};

class Search {
public:
    Search(const Gm& gm, double ub, bool collect, std::size_t limit,
           const SolveLimits& limits)
        : gm_(gm), top_(gm.top()), ub_(std::min(ub, gm.top())), collect_(collect),
          limit_(limit), node_limit_(limits.node_limit ? *limits.node_limit : -1) {
        const int n = gm_.n();
        assign_.assign(std::size_t(n), kUnset);
        cur_.resize(std::size_t(n));
        removed_.resize(std::size_t(n));
        domsize_.resize(std::size_t(n));
        degree_.resize(std::size_t(n), 0);
        for (int i = 0; i < n; ++i) {
            cur_[std::size_t(i)] = gm_.unary(i);
            removed_[std::size_t(i)].assign(std::size_t(gm_.domain(i)), 0);
            domsize_[std::size_t(i)] = gm_.domain(i);
        }
        adj_.resize(std::size_t(n));
        dac_.resize(std::size_t(n));
        for (int i = 0; i < n; ++i) dac_[std::size_t(i)].assign(std::size_t(gm_.domain(i)), 0.0);
        int pid = 0;
        for (const auto& [key, m] : gm_.pairs()) {
            adj_[std::size_t(key.first)].push_back({key.second, &m, false, pid});
            adj_[std::size_t(key.second)].push_back({key.first, &m, true, pid});
            // the lower-index endpoint holds the pair's per-value row minima,
            // so every unassigned-unassigned pair enters the bound exactly once
            rowmin_.emplace_back(std::size_t(m.rows));
            auto& rm = rowmin_.back();
            for (int a = 0; a < m.rows; ++a) {
                double best = top_;
                for (int b = 0; b < m.cols; ++b) best = std::min(best, m.at(a, b));
                rm[std::size_t(a)] = std::min(best, top_);
                dac_[std::size_t(key.first)][std::size_t(a)] += rm[std::size_t(a)];
            }
            ++pid;
        }
        degree_.assign(std::size_t(n), 0);
        for (int i = 0; i < n; ++i) degree_[std::size_t(i)] = int(adj_[std::size_t(i)].size());
        // initial forward checking on unary costs
        for (int i = 0; i < n; ++i)
            for (int v = 0; v < gm_.domain(i); ++v)
                if (cur_[std::size_t(i)][std::size_t(v)] >= top_) {
                    removed_[std::size_t(i)][std::size_t(v)] = 1;
                    --domsize_[std::size_t(i)];
                }
        if (limits.time_limit_s)
            deadline_ = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(*limits.time_limit_s));
        for (int i = 0; i < n; ++i)
            if (domsize_[std::size_t(i)] == 0) { root_wipeout_ = true; break; }
    }

    void run() {
        if (!root_wipeout_) dfs();
    }

    bool aborted() const { return aborted_; }
    std::int64_t nodes() const { return nodes_; }
    std::int64_t backtracks() const { return backtracks_; }
    const Assignment& best() const { return best_; }
    double best_cost() const { return best_cost_; }
    bool found() const { return !best_.empty(); }
    std::vector<Assignment> take_collected() { return std::move(collected_); }

private:
    int pick_variable() const {
        int var = -1;
        for (int i = 0; i < gm_.n(); ++i) {
            if (assign_[std::size_t(i)] != kUnset) continue;
            if (var == -1) { var = i; continue; }
            const int ds = domsize_[std::size_t(i)], dv = domsize_[std::size_t(var)];
            if (ds < dv || (ds == dv && degree_[std::size_t(i)] > degree_[std::size_t(var)]))
                var = i;
        }
        return var;
    }

    /* Per unassigned variable: min over alive values of accumulated incoming
     * cost plus the held row minima of its pairs toward later unassigned
     * variables.  No early exit on partial sums: with negative costs a later
     * variable's minimum can pull the bound back down, so only the full sum
     * is sound. */
    double lower_bound() const {
        double lb = prefix_;
        for (int i = 0; i < gm_.n(); ++i) {
            if (assign_[std::size_t(i)] != kUnset) continue;
            const auto& c = cur_[std::size_t(i)];
            const auto& d = dac_[std::size_t(i)];
            const auto& rm = removed_[std::size_t(i)];
            double best = top_;
            for (std::size_t v = 0; v < c.size(); ++v)
                if (!rm[v] && c[v] + d[v] < best) best = c[v] + d[v];
            lb += best;
        }
        return lb;
    }

    struct Frame {
        int j;
        std::vector<double> cur;
        std::vector<double> dac;
        std::vector<char> removed;
        int domsize;
    };

    // applies the assignment, forward-checks neighbors; false on any wipeout
    bool apply(int var, int val, std::vector<Frame>& frames) {
        prefix_stack_.push_back(prefix_);
        prefix_ = gm_.sat_add(prefix_, cur_[std::size_t(var)][std::size_t(val)]);
        assign_[std::size_t(var)] = val;
        bool ok = true;
        for (const Arc& arc : adj_[std::size_t(var)]) {
            if (assign_[std::size_t(arc.other)] != kUnset) continue;
            frames.push_back({arc.other, cur_[std::size_t(arc.other)], dac_[std::size_t(arc.other)],
                              removed_[std::size_t(arc.other)], domsize_[std::size_t(arc.other)]});
            auto& c = cur_[std::size_t(arc.other)];
            auto& rm = removed_[std::size_t(arc.other)];
            const int dj = gm_.domain(arc.other);
            if (arc.transposed) {
                // var indexes columns of *m, neighbor indexes rows; the
                // neighbor is the lower index and holds this pair's row
                // minima, which move into the message now
                const double* col = arc.m->v.data() + std::size_t(val);
                const std::size_t stride = std::size_t(arc.m->cols);
                auto& d = dac_[std::size_t(arc.other)];
                const auto& held = rowmin_[std::size_t(arc.pair_id)];
                for (int w = 0; w < dj; ++w) {
                    c[std::size_t(w)] = gm_.sat_add(c[std::size_t(w)], col[std::size_t(w) * stride]);
                    d[std::size_t(w)] -= held[std::size_t(w)];
                }
            } else {
                const double* row = arc.m->v.data() + std::size_t(val) * std::size_t(arc.m->cols);
                for (int w = 0; w < dj; ++w) c[std::size_t(w)] = gm_.sat_add(c[std::size_t(w)], row[w]);
            }
            int alive = 0;
            for (int w = 0; w < dj; ++w) {
                if (!rm[std::size_t(w)] && c[std::size_t(w)] >= top_) rm[std::size_t(w)] = 1;
                if (!rm[std::size_t(w)]) ++alive;
            }
            domsize_[std::size_t(arc.other)] = alive;
            if (alive == 0) ok = false;
        }
        return ok;
    }

    void undo(int var, const std::vector<Frame>& frames) {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
            cur_[std::size_t(it->j)] = it->cur;
            dac_[std::size_t(it->j)] = it->dac;
            removed_[std::size_t(it->j)] = it->removed;
            domsize_[std::size_t(it->j)] = it->domsize;
        }
        prefix_ = prefix_stack_.back();
        prefix_stack_.pop_back();
        assign_[std::size_t(var)] = kUnset;
    }

    bool out_of_budget() {
        if (node_limit_ >= 0 && nodes_ >= node_limit_) return true;
        if (deadline_ && (nodes_ & 1023) == 0 &&
            std::chrono::steady_clock::now() >= *deadline_)
            return true;
        return false;
    }

    void dfs() {
        const int var = pick_variable();
        if (var == -1) {
            const double cost = evaluate(gm_, assign_);
            if (cost < ub_) {
                if (collect_) {
                    collected_.push_back(assign_);
                    if (collected_.size() >= limit_) aborted_ = true;
                } else {
                    best_ = assign_;
                    best_cost_ = cost;
                    ub_ = cost;
                }
            }
            return;
        }
        // candidate values ascending in accumulated-incoming plus held row
        // minima (the variable's share of the bound), then value
        std::vector<std::pair<double, int>> order;
        order.reserve(cur_[std::size_t(var)].size());
        for (int v = 0; v < gm_.domain(var); ++v)
            if (!removed_[std::size_t(var)][std::size_t(v)])
                order.emplace_back(cur_[std::size_t(var)][std::size_t(v)] +
                                       dac_[std::size_t(var)][std::size_t(v)],
                                   v);
        std::sort(order.begin(), order.end());

        for (const auto& [cost_in, val] : order) {
            (void)cost_in;
            if (out_of_budget()) { aborted_ = true; return; }
            ++nodes_;
            std::vector<Frame> frames;
            const bool ok = apply(var, val, frames);
            if (ok && lower_bound() < ub_) {
                dfs();
            } else {
                ++backtracks_;
            }
            undo(var, frames);
            if (aborted_) return;
        }
    }

    const Gm& gm_;
    double top_;
    double ub_;
    bool collect_;
    std::size_t limit_;
    std::int64_t node_limit_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;

    Assignment assign_;
    std::vector<std::vector<double>> cur_;
    std::vector<std::vector<double>> dac_;  // held row minima toward later unassigned pairs
    std::vector<std::vector<char>> removed_;
    std::vector<int> domsize_;
    std::vector<int> degree_;
    std::vector<std::vector<Arc>> adj_;
    std::vector<std::vector<double>> rowmin_;  // per pair: min over the higher-index value
    double prefix_ = 0.0;
    std::vector<double> prefix_stack_;

    std::int64_t nodes_ = 0;
    std::int64_t backtracks_ = 0;
    bool aborted_ = false;
    bool root_wipeout_ = false;
    Assignment best_;
    double best_cost_ = 0.0;
    std::vector<Assignment> collected_;
};

}  // namespace

SolveResult solve(const Gm& gm, const SolveLimits& limits) {
    const double ub = limits.upper_bound ? std::min(*limits.upper_bound, gm.top()) : gm.top();
    Search s(gm, ub, /*collect=*/false, 0, limits);
    s.run();
    SolveResult r;
    r.nodes = s.nodes();
    r.backtracks = s.backtracks();
    if (s.found()) {
        r.assignment = s.best();
        r.cost = s.best_cost();
        r.feasible = r.cost < gm.top();
    } else {
        r.cost = gm.top();
        r.feasible = false;
    }
    // an uninterrupted search proves its outcome, feasible or not
    r.proven_optimal = !s.aborted();
    return r;
}

std::vector<Assignment> enumerate(const Gm& gm, double cost_bound, std::size_t limit) {
    if (limit == 0) return {};
    SolveLimits none;
    Search s(gm, cost_bound, /*collect=*/true, limit, none);
    s.run();
    return s.take_collected();
}

SolveResult brute_force(const Gm& gm, std::uint64_t max_states) {
    std::uint64_t states = 1;
    for (int i = 0; i < gm.n(); ++i) {
        if (states > max_states / std::uint64_t(gm.domain(i)) + 1)
            throw std::invalid_argument("brute_force: state space too large");
        states *= std::uint64_t(gm.domain(i));
    }
    if (states > max_states)
        throw std::invalid_argument("brute_force: state space too large");

    SolveResult r;
    r.cost = gm.top();
    Assignment y(std::size_t(gm.n()), 0);
    bool have = false;
    for (std::uint64_t it = 0;; ++it) {
        const double c = evaluate(gm, y);
        ++r.nodes;
        if (c < gm.top() && (!have || c < r.cost)) {
            r.cost = c;
            r.assignment = y;
            have = true;
        }
        // odometer increment, last variable fastest
        int pos = gm.n() - 1;
        while (pos >= 0) {
            if (++y[std::size_t(pos)] < gm.domain(pos)) break;
            y[std::size_t(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    r.feasible = have;
    r.proven_optimal = true;
    if (!have) r.cost = gm.top();
    return r;
}

Assignment impute(const Gm& gm, const Assignment& partial, const SolveLimits& limits) {
    SolveResult r = solve(condition(gm, partial), limits);
    if (!r.feasible)
        throw std::runtime_error("impute: conditioned model has no assignment below top");
    for (std::size_t i = 0; i < partial.size(); ++i)
        if (partial[i] != kUnset && r.assignment[i] != partial[i])
            throw std::runtime_error("impute: completion dropped an observed value");
    return r.assignment;
}

}  // namespace cfn
