#include "cfn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cfn/dataset.hpp"
#include "cfn/solver.hpp"
#include "doctest.h"

using namespace cfn;

namespace {

// shifted-rows grid: row r holds 0..8 rotated by 3r + r/3, valid by construction
Assignment canonical_sudoku() {
    Assignment y(81);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) y[std::size_t(r * 9 + c)] = (r * 3 + r / 3 + c) % 9;
    return y;
}

Assignment latin5() {
    Assignment y(25);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) y[std::size_t(r * 5 + c)] = (r + c) % 5;
    return y;
}

}  // namespace

TEST_CASE("the rule model forbids equal values on every row, column and box peer") {
    Gm gm = sudoku_rules();
    REQUIRE(gm.n() == 81);
    for (int i = 0; i < 81; ++i) CHECK(gm.domain(i) == 9);

    const auto& pairs = gm.pairs();
    CHECK(pairs.size() == 810);
    for (const auto& [key, m] : pairs) {
        for (int a = 0; a < 9; ++a)
            for (int b = 0; b < 9; ++b) CHECK(m.at(a, b) == (a == b ? gm.top() : 0.0));
    }

    // peers share a row, a column or a box; cell 0 and cell 80 share none
    CHECK(pairs.count({0, 1}) == 1);
    CHECK(pairs.count({0, 9}) == 1);
    CHECK(pairs.count({0, 10}) == 1);
    CHECK(pairs.count({0, 80}) == 0);
    CHECK(pairs.count({30, 32}) == 1);

    const Assignment good = canonical_sudoku();
    CHECK(evaluate(gm, good) == 0.0);

    Assignment bad = good;
    bad[1] = bad[0];  // clash inside row 0
    CHECK(evaluate(gm, bad) >= gm.top());
}

TEST_CASE("the reference pattern lists exactly the equal-value tuples of the rules") {
    const ReferencePattern ref = sudoku_reference();
    const Gm gm = sudoku_rules();
    REQUIRE(ref.forbidden.size() == 810);
    for (const auto& [key, tuples] : ref.forbidden) {
        CHECK(gm.pairs().count(key) == 1);
        REQUIRE(tuples.size() == 9);
        for (int a = 0; a < 9; ++a) CHECK(tuples.count({a, a}) == 1);
    }
}

TEST_CASE("futoshiki rules stack inequality clues on top of the latin-square model") {
    Sample s;
    s.size = 5;
    Gm plain = futoshiki_rules(s);
    CHECK(plain.n() == 25);
    CHECK(plain.pairs().size() == 100);  // 10 same-row + 10 same-column pairs per line
    CHECK(evaluate(plain, latin5()) == 0.0);

    Assignment repeat = latin5();
    repeat[1] = repeat[0];
    CHECK(evaluate(plain, repeat) >= plain.top());

    // cell (0,0)=0 and (0,1)=1 under latin5: a "greater than" clue must reject it
    s.inequalities.push_back({0, 1, 1});
    CHECK(evaluate(futoshiki_rules(s), latin5()) >= plain.top());
    s.inequalities.back().dir = -1;
    Gm less = futoshiki_rules(s);
    CHECK(evaluate(less, latin5()) == 0.0);

    // the clue merges into the all-different matrix of the adjacent pair
    const Matrix& m = less.pairs().at({0, 1});
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) CHECK(m.at(a, b) == (a < b ? 0.0 : less.top()));
}

TEST_CASE("the terminal graph is 3-regular with a fixed-point-free antipodal pairing") {
    const CutGraph& g = soccer_ball();
    REQUIRE(g.n == 60);
    REQUIRE(g.edges.size() == 90);
    CHECK(std::is_sorted(g.edges.begin(), g.edges.end()));
    CHECK(std::adjacent_find(g.edges.begin(), g.edges.end()) == g.edges.end());

    std::vector<int> degree(60, 0);
    std::set<std::pair<int, int>> edge_set;
    for (const auto& e : g.edges) {
        REQUIRE(e[0] >= 0);
        REQUIRE(e[0] < e[1]);
        REQUIRE(e[1] < 60);
        ++degree[std::size_t(e[0])];
        ++degree[std::size_t(e[1])];
        edge_set.insert({e[0], e[1]});
    }
    for (int v = 0; v < 60; ++v) CHECK(degree[std::size_t(v)] == 3);

    // connected: walk the edge list from vertex 0
    std::vector<int> seen(60, 0);
    seen[0] = 1;
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& e : g.edges)
            if (seen[std::size_t(e[0])] != seen[std::size_t(e[1])]) {
                seen[std::size_t(e[0])] = seen[std::size_t(e[1])] = 1;
                grew = true;
            }
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == 60);

    REQUIRE(g.antipode.size() == 60);
    for (int v = 0; v < 60; ++v) {
        const int w = g.antipode[std::size_t(v)];
        REQUIRE(w >= 0);
        REQUIRE(w < 60);
        CHECK(w != v);
        CHECK(g.antipode[std::size_t(w)] == v);
        CHECK(edge_set.count({std::min(v, w), std::max(v, w)}) == 0);
    }
}

TEST_CASE("generated grids are uniquely solvable and consistent with their clues") {
    SudokuGenConfig cfg;
    cfg.count = 2;
    cfg.target_hints = 25;
    cfg.seed = 32;
    const Dataset ds = gen_sudoku(cfg);
    REQUIRE(ds.task == Task::Sudoku);
    REQUIRE(ds.samples.size() == 2);

    Gm rules = sudoku_rules();
    for (const Sample& s : ds.samples) {
        REQUIRE(s.puzzle.size() == 81);
        REQUIRE(s.solution.size() == 81);
        CHECK(evaluate(rules, s.solution) == 0.0);

        const Assignment hints = s.hints(Task::Sudoku);
        int given = 0;
        for (int i = 0; i < 81; ++i)
            if (hints[std::size_t(i)] != kUnset) {
                ++given;
                CHECK(hints[std::size_t(i)] == s.solution[std::size_t(i)]);
            }
        CHECK(given == cfg.target_hints);

        auto sols = enumerate(condition(rules, hints), rules.top(), 2);
        REQUIRE(sols.size() == 1);
        CHECK(sols[0] == s.solution);
    }

    CHECK(gen_sudoku(cfg).samples[0].puzzle == ds.samples[0].puzzle);
    cfg.seed = 33;
    CHECK(gen_sudoku(cfg).samples[0].puzzle != ds.samples[0].puzzle);
}

TEST_CASE("under-clued grids record their complete solution set") {
    SudokuGenConfig cfg;
    cfg.count = 2;
    cfg.target_hints = 20;
    cfg.many_solutions = true;
    cfg.seed = 7;
    const Dataset ds = gen_sudoku(cfg);
    REQUIRE(ds.samples.size() == 2);

    Gm rules = sudoku_rules();
    for (const Sample& s : ds.samples) {
        REQUIRE(s.solutions.size() >= 2);
        REQUIRE(s.solutions.size() <= std::size_t(cfg.max_recorded_solutions));
        CHECK(std::is_sorted(s.solutions.begin(), s.solutions.end()));
        CHECK(std::adjacent_find(s.solutions.begin(), s.solutions.end()) == s.solutions.end());
        CHECK(std::binary_search(s.solutions.begin(), s.solutions.end(), s.solution));

        const Assignment hints = s.hints(Task::Sudoku);
        for (const Assignment& y : s.solutions) {
            CHECK(evaluate(rules, y) == 0.0);
            for (int i = 0; i < 81; ++i)
                if (hints[std::size_t(i)] != kUnset) CHECK(y[std::size_t(i)] == hints[std::size_t(i)]);
        }

        // asking for one more than the recorded count proves the set is complete
        auto all = enumerate(condition(rules, hints), rules.top(),
                             std::size_t(cfg.max_recorded_solutions) + 1);
        std::sort(all.begin(), all.end());
        CHECK(all == s.solutions);
    }
}

TEST_CASE("hint targets outside the unique-grid range are rejected") {
    SudokuGenConfig cfg;
    cfg.count = 1;
    cfg.target_hints = 16;
    CHECK_THROWS_AS(gen_sudoku(cfg), std::invalid_argument);
    cfg.target_hints = 82;
    CHECK_THROWS_AS(gen_sudoku(cfg), std::invalid_argument);
}

TEST_CASE("generated futoshiki boards are valid and their clues point the right way") {
    FutoshikiGenConfig cfg;
    cfg.count = 4;
    cfg.seed = 11;
    const Dataset ds = gen_futoshiki(cfg);
    REQUIRE(ds.task == Task::Futoshiki);
    REQUIRE(ds.samples.size() == 4);

    std::size_t total_clues = 0;
    for (const Sample& s : ds.samples) {
        CHECK(s.size == 5);
        REQUIRE(s.solution.size() == 25);
        for (int v : s.solution) {
            CHECK(v >= 0);
            CHECK(v < 5);
        }
        CHECK(evaluate(futoshiki_rules(s), s.solution) == 0.0);
        for (const auto& q : s.inequalities) {
            CHECK(q.a < q.b);
            CHECK((q.b - q.a == 1 || q.b - q.a == 5));  // horizontally or vertically adjacent
            const int va = s.solution[std::size_t(q.a)], vb = s.solution[std::size_t(q.b)];
            CHECK((q.dir > 0 ? va > vb : va < vb));
        }
        total_clues += s.inequalities.size();
    }
    CHECK(total_clues > 0);

    const Dataset again = gen_futoshiki(cfg);
    CHECK(again.samples[2].solution == ds.samples[2].solution);
    CHECK(again.samples[2].inequalities.size() == ds.samples[2].inequalities.size());
}

TEST_CASE("cut instances pin antipodal terminals and store provably optimal labelings") {
    const CutGraph& g = soccer_ball();
    for (const bool maximize : {false, true}) {
        CutGenConfig cfg;
        cfg.count = maximize ? 2 : 3;
        cfg.maximize = maximize;
        cfg.seed = 5;
        const Dataset ds = gen_cut(cfg);
        REQUIRE(ds.task == (maximize ? Task::MaxCut : Task::MinCut));

        for (const Sample& s : ds.samples) {
            REQUIRE(s.edges.size() == 90);
            REQUIRE(s.capacities.size() == 90);
            CHECK(s.sink == g.antipode[std::size_t(s.source)]);
            for (std::size_t e = 0; e < 90; ++e) {
                CHECK(s.edges[e][0] == g.edges[e][0]);
                CHECK(s.edges[e][1] == g.edges[e][1]);
                const int kind = s.edges[e][2];
                REQUIRE(kind >= 0);
                REQUIRE(kind < kNumBridgeKinds);
                CHECK(s.capacities[e] == kBridgeCapacity[std::size_t(kind)]);
                const bool at_terminal = s.edges[e][0] == s.source || s.edges[e][1] == s.source ||
                                         s.edges[e][0] == s.sink || s.edges[e][1] == s.sink;
                if (at_terminal) CHECK(kind == 0);  // terminal bridges are always stone
            }

            REQUIRE(s.solution.size() == 60);
            CHECK(s.solution[std::size_t(s.source)] == 0);
            CHECK(s.solution[std::size_t(s.sink)] == 1);

            const Gm gm = condition(cut_model(s, ds.task, s.capacities), s.hints(ds.task));
            const double cost = evaluate(gm, s.solution);
            CHECK(cost < gm.top());
            CHECK(cost == std::round(cost));  // integer capacities give integer objectives

            SolveLimits tighter;
            tighter.upper_bound = cost - 0.5;
            CHECK_FALSE(solve(gm, tighter).feasible);  // nothing strictly cheaper exists
        }
    }
}

TEST_CASE("mirroring a cut dataset swaps terminals and complements the labels") {
    CutGenConfig cfg;
    cfg.count = 2;
    cfg.seed = 9;
    const Dataset ds = gen_cut(cfg);
    const Dataset big = augment_flip(ds);
    REQUIRE(big.samples.size() == 4);

    for (std::size_t k = 0; k < 2; ++k) {
        const Sample& a = big.samples[k];
        const Sample& b = big.samples[k + 2];
        CHECK(a.puzzle == ds.samples[k].puzzle);
        CHECK(a.solution == ds.samples[k].solution);
        CHECK(b.source == a.sink);
        CHECK(b.sink == a.source);
        REQUIRE(b.edges.size() == a.edges.size());
        for (std::size_t e = 0; e < a.edges.size(); ++e) {
            CHECK(b.edges[e] == a.edges[e]);
            CHECK(b.capacities[e] == a.capacities[e]);
        }
        REQUIRE(b.solution.size() == a.solution.size());
        for (std::size_t i = 0; i < a.solution.size(); ++i)
            CHECK(b.solution[i] == 1 - a.solution[i]);

        // complementing every label leaves the set of cut bridges unchanged
        const Gm gm = cut_model(a, ds.task, a.capacities);
        CHECK(evaluate(gm, b.solution) == evaluate(gm, a.solution));
    }

    Dataset wrong;
    wrong.task = Task::Sudoku;
    CHECK_THROWS_AS(augment_flip(wrong), std::invalid_argument);
}
