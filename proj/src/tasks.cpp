#include "cfn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <stdexcept>

#include "cfn/solver.hpp"

namespace cfn {

/* ---------- sudoku ---------- */

static std::vector<std::pair<int, int>> sudoku_peer_pairs() {
    std::set<std::pair<int, int>> out;
    auto idx = [](int r, int c) { return r * 9 + c; };
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            const int i = idx(r, c);
            for (int c2 = c + 1; c2 < 9; ++c2) out.insert({i, idx(r, c2)});
            for (int r2 = r + 1; r2 < 9; ++r2) out.insert({i, idx(r2, c)});
            const int br = 3 * (r / 3), bc = 3 * (c / 3);
            for (int r2 = br; r2 < br + 3; ++r2)
                for (int c2 = bc; c2 < bc + 3; ++c2) {
                    const int j = idx(r2, c2);
                    if (j > i) out.insert({i, j});
                }
        }
    return {out.begin(), out.end()};
}

Gm sudoku_rules() {
    Gm gm(std::vector<int>(81, 9));
    Matrix diff(9, 9);
    for (int a = 0; a < 9; ++a) diff.at(a, a) = gm.top();
    const auto pairs = sudoku_peer_pairs();
    if (pairs.size() != 810) throw std::logic_error("sudoku: expected 810 peer pairs");
    for (const auto& [i, j] : pairs) gm.set_pair(i, j, diff);
    return gm;
}

ReferencePattern sudoku_reference() {
    ReferencePattern ref;
    for (const auto& key : sudoku_peer_pairs()) {
        auto& tuples = ref.forbidden[key];
        for (int a = 0; a < 9; ++a) tuples.insert({a, a});
    }
    return ref;
}

/* ---------- futoshiki ---------- */

Gm futoshiki_rules(const Sample& s, int size) {
    const int n = size * size;
    Gm gm(std::vector<int>(std::size_t(n), size));
    Matrix diff(size, size);
    for (int a = 0; a < size; ++a) diff.at(a, a) = gm.top();
    auto idx = [size](int r, int c) { return r * size + c; };
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            for (int c2 = c + 1; c2 < size; ++c2) gm.add_pair(idx(r, c), idx(r, c2), diff);
            for (int r2 = r + 1; r2 < size; ++r2) gm.add_pair(idx(r, c), idx(r2, c), diff);
        }
    for (const auto& q : s.inequalities) {
        Matrix m(size, size);
        for (int a = 0; a < size; ++a)
            for (int b = 0; b < size; ++b) {
                const bool ok = q.dir > 0 ? a > b : a < b;
                if (!ok) m.at(a, b) = gm.top();
            }
        gm.add_pair(q.a, q.b, m);
    }
    return gm;
}

/* ---------- cut tasks ---------- */

Gm cut_model(const Sample& s, Task task, const std::vector<double>& capacities) {
    if (capacities.size() != s.edges.size())
        throw std::invalid_argument("cut_model: capacity count mismatch");
    int n = 0;
    for (const auto& e : s.edges) n = std::max({n, e[0] + 1, e[1] + 1});
    Gm gm(std::vector<int>(std::size_t(n), 2));
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        Matrix m(2, 2);
        const double c = capacities[e];
        if (task == Task::MaxCut) {
            m.at(0, 0) = c;  // penalize leaving the edge uncut
            m.at(1, 1) = c;
        } else {
            m.at(0, 1) = c;  // pay for cutting the edge
            m.at(1, 0) = c;
        }
        gm.add_pair(s.edges[e][0], s.edges[e][1], m);
    }
    return gm;
}

namespace {

CutGraph build_soccer_ball() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    using V3 = std::array<double, 3>;
    std::vector<V3> base;
    auto push_orbit = [&](double a, double b, double c) {
        const double sa[] = {a, -a}, sb[] = {b, -b}, sc[] = {c, -c};
        const int na = a == 0.0 ? 1 : 2, nb = b == 0.0 ? 1 : 2, nc = c == 0.0 ? 1 : 2;
        for (int ia = 0; ia < na; ++ia)
            for (int ib = 0; ib < nb; ++ib)
                for (int ic = 0; ic < nc; ++ic) {
                    const V3 p{sa[ia], sb[ib], sc[ic]};
                    base.push_back({p[0], p[1], p[2]});
                    base.push_back({p[1], p[2], p[0]});  // even permutations
                    base.push_back({p[2], p[0], p[1]});
                }
    };
    push_orbit(0.0, 1.0, 3.0 * phi);
    push_orbit(1.0, 2.0 + phi, 2.0 * phi);
    push_orbit(phi, 2.0, 2.0 * phi + 1.0);

    std::vector<V3> verts;
    for (const auto& p : base) {
        bool dup = false;
        for (const auto& q : verts)
            if (std::abs(p[0] - q[0]) + std::abs(p[1] - q[1]) + std::abs(p[2] - q[2]) < 1e-9) {
                dup = true;
                break;
            }
        if (!dup) verts.push_back(p);
    }
    if (verts.size() != 60) throw std::logic_error("soccer ball: expected 60 vertices");

    auto dist2 = [](const V3& p, const V3& q) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        return dx * dx + dy * dy + dz * dz;
    };
    std::vector<std::array<int, 2>> raw_edges;
    for (int i = 0; i < 60; ++i)
        for (int j = i + 1; j < 60; ++j)
            if (std::abs(dist2(verts[std::size_t(i)], verts[std::size_t(j)]) - 4.0) < 1e-6)
                raw_edges.push_back({i, j});
    if (raw_edges.size() != 90) throw std::logic_error("soccer ball: expected 90 edges");

    /* Relabel vertices breadth-first so that index order visits the surface
     * contiguously; this keeps branch-and-bound prefixes locally connected. */
    std::vector<std::vector<int>> adj(60);
    for (const auto& e : raw_edges) {
        adj[std::size_t(e[0])].push_back(e[1]);
        adj[std::size_t(e[1])].push_back(e[0]);
    }
    for (auto& a : adj) {
        if (a.size() != 3) throw std::logic_error("soccer ball: expected a 3-regular graph");
        std::sort(a.begin(), a.end());
    }
    std::vector<int> order, pos(60, -1);
    std::deque<int> queue{0};
    pos[0] = 0;
    order.push_back(0);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int w : adj[std::size_t(u)])
            if (pos[std::size_t(w)] == -1) {
                pos[std::size_t(w)] = int(order.size());
                order.push_back(w);
                queue.push_back(w);
            }
    }

    CutGraph g;
    g.n = 60;
    for (const auto& e : raw_edges) {
        int u = pos[std::size_t(e[0])], v = pos[std::size_t(e[1])];
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v});
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.antipode.assign(60, -1);
    for (int i = 0; i < 60; ++i) {
        const V3& p = verts[std::size_t(order[std::size_t(i)])];
        for (int j = 0; j < 60; ++j) {
            const V3& q = verts[std::size_t(order[std::size_t(j)])];
            if (std::abs(p[0] + q[0]) + std::abs(p[1] + q[1]) + std::abs(p[2] + q[2]) < 1e-9) {
                g.antipode[std::size_t(i)] = j;
                break;
            }
        }
        if (g.antipode[std::size_t(i)] == -1)
            throw std::logic_error("soccer ball: missing antipodal vertex");
    }
    return g;
}

}  // namespace

const CutGraph& soccer_ball() {
    static const CutGraph g = build_soccer_ball();
    return g;
}

/* ---------- generators ---------- */

namespace {

void set_hint(Gm& gm, int cell, int value) {
    auto& u = gm.unary(cell);
    std::fill(u.begin(), u.end(), gm.top());
    u[std::size_t(value)] = 0.0;
}

void clear_hint(Gm& gm, int cell) {
    auto& u = gm.unary(cell);
    std::fill(u.begin(), u.end(), 0.0);
}

/* Feasible assignment of a hard model, picked by greedy descent over fresh
 * uniform unary noise.  The noise only steers which solution the search
 * reaches first, so the draw is cheap and roughly uniform. */
Assignment sample_solution(Gm& gm, Rng& rng) {
    for (int i = 0; i < gm.n(); ++i)
        for (double& c : gm.unary(i)) c = rng.uniform();
    auto sols = enumerate(gm, gm.top(), 1);
    for (int i = 0; i < gm.n(); ++i) clear_hint(gm, i);
    if (sols.empty()) return {};
    return sols[0];
}

std::size_t count_solutions(Gm& rules, const Assignment& hints, std::size_t limit) {
    for (int i = 0; i < rules.n(); ++i)
        if (hints[std::size_t(i)] != kUnset)
            set_hint(rules, i, hints[std::size_t(i)]);
        else
            clear_hint(rules, i);
    const auto sols = enumerate(rules, rules.top(), limit);
    for (int i = 0; i < rules.n(); ++i) clear_hint(rules, i);
    return sols.size();
}

}  // namespace

Dataset gen_sudoku(const SudokuGenConfig& cfg) {
    if (!cfg.many_solutions && (cfg.target_hints < 17 || cfg.target_hints > 81))
        throw std::invalid_argument("gen_sudoku: unique grids need 17 <= target_hints <= 81");
    Dataset ds;
    ds.task = Task::Sudoku;
    Gm rules = sudoku_rules();
    for (int s = 0; s < cfg.count; ++s) {
        Rng rng(Rng::mix(cfg.seed, std::uint64_t(s)));
        Assignment full = sample_solution(rules, rng);
        if (full.empty()) throw std::logic_error("gen_sudoku: rules model infeasible");
        if (evaluate(rules, full) != 0.0)
            throw std::logic_error("gen_sudoku: sampled grid violates the rules");

        Assignment hints = full;
        int hint_count = 81;
        std::vector<int> order(81);
        for (int i = 0; i < 81; ++i) order[std::size_t(i)] = i;
        rng.shuffle(order);

        // remove hints while the grid stays uniquely solvable
        for (int cell : order) {
            if (hint_count <= cfg.target_hints) break;
            const int saved = hints[std::size_t(cell)];
            hints[std::size_t(cell)] = kUnset;
            if (count_solutions(rules, hints, 2) == 1)
                --hint_count;
            else
                hints[std::size_t(cell)] = saved;
        }

        Sample out;
        if (cfg.many_solutions) {
            /* drop below uniqueness: keep removing random hints while the
             * solution set stays small enough to record in full */
            std::vector<int> still;
            for (int i = 0; i < 81; ++i)
                if (hints[std::size_t(i)] != kUnset) still.push_back(i);
            rng.shuffle(still);
            for (int cell : still) {
                if (hint_count <= cfg.target_hints) break;
                const int saved = hints[std::size_t(cell)];
                hints[std::size_t(cell)] = kUnset;
                const std::size_t cnt =
                    count_solutions(rules, hints, std::size_t(cfg.max_recorded_solutions) + 1);
                if (cnt > std::size_t(cfg.max_recorded_solutions)) {
                    hints[std::size_t(cell)] = saved;  // would blow up the recorded set
                } else {
                    --hint_count;
                }
            }
            for (int i = 0; i < rules.n(); ++i)
                if (hints[std::size_t(i)] != kUnset) set_hint(rules, i, hints[std::size_t(i)]);
            auto sols = enumerate(rules, rules.top(), std::size_t(cfg.max_recorded_solutions));
            for (int i = 0; i < rules.n(); ++i) clear_hint(rules, i);
            std::sort(sols.begin(), sols.end());
            out.solutions = std::move(sols);
            out.solution = out.solutions[std::size_t(rng.below(out.solutions.size()))];
        } else {
            out.solution = full;
        }
        if (hint_count > cfg.target_hints)
            std::fprintf(stderr,
                         "gen_sudoku: grid %d stopped at %d hints (target %d unreachable)\n", s,
                         hint_count, cfg.target_hints);
        out.puzzle = format_grid81(hints);
        ds.samples.push_back(std::move(out));
    }
    return ds;
}

Dataset gen_futoshiki(const FutoshikiGenConfig& cfg) {
    Dataset ds;
    ds.task = Task::Futoshiki;
    const int size = cfg.size;
    for (int s = 0; s < cfg.count; ++s) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(Rng::mix(cfg.seed, (std::uint64_t(s) << 16) + attempt));
            Sample sample;
            sample.size = size;
            auto idx = [size](int r, int c) { return r * size + c; };
            for (int r = 0; r < size; ++r)
                for (int c = 0; c < size; ++c) {
                    if (c + 1 < size && rng.uniform() < cfg.p_ineq)
                        sample.inequalities.push_back(
                            {idx(r, c), idx(r, c + 1), rng.uniform() < 0.5 ? 1 : -1});
                    if (r + 1 < size && rng.uniform() < cfg.p_ineq)
                        sample.inequalities.push_back(
                            {idx(r, c), idx(r + 1, c), rng.uniform() < 0.5 ? 1 : -1});
                }
            Gm rules = futoshiki_rules(sample, size);
            Assignment sol = sample_solution(rules, rng);
            if (sol.empty()) continue;  // contradictory inequality draw; redraw
            sample.solution = std::move(sol);
            ds.samples.push_back(std::move(sample));
            break;
        }
    }
    return ds;
}

Dataset gen_cut(const CutGenConfig& cfg) {
    Dataset ds;
    ds.task = cfg.maximize ? Task::MaxCut : Task::MinCut;
    const CutGraph& g = soccer_ball();
    for (int s = 0; s < cfg.count; ++s) {
        Rng rng(Rng::mix(cfg.seed, std::uint64_t(s)));
        Sample sample;
        sample.source = int(rng.below(std::uint64_t(g.n)));
        sample.sink = g.antipode[std::size_t(sample.source)];
        for (const auto& e : g.edges) {
            const bool endpoint = e[0] == sample.source || e[1] == sample.source ||
                                  e[0] == sample.sink || e[1] == sample.sink;
            const int kind = endpoint ? 0 : int(rng.below(kNumBridgeKinds));
            sample.edges.push_back({e[0], e[1], kind});
            sample.capacities.push_back(kBridgeCapacity[kind]);
        }
        Gm gm = condition(cut_model(sample, ds.task, sample.capacities), sample.hints(ds.task));
        SolveResult r = solve(gm);
        if (!r.feasible || !r.proven_optimal)
            throw std::logic_error("gen_cut: ground-truth solve failed");
        sample.solution = std::move(r.assignment);
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

Dataset augment_flip(const Dataset& ds) {
    if (!is_cut_task(ds.task))
        throw std::invalid_argument("augment_flip: only defined for cut datasets");
    Dataset out = ds;
    for (const auto& s : ds.samples) {
        Sample flipped = s;
        std::swap(flipped.source, flipped.sink);
        for (int& b : flipped.solution) b ^= 1;
        out.samples.push_back(std::move(flipped));
    }
    return out;
}

}  // namespace cfn
