#pragma once

#include <array>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "cfn/dataset.hpp"
#include "cfn/gm.hpp"
#include "cfn/rng.hpp"

namespace cfn {

/* ---- ground-truth models ---- */

/* 81 variables, 9 values, one hard difference matrix per same-row, same-
 * column or same-box pair: 810 pairs in total. */
Gm sudoku_rules();

/* The 810 sudoku peer pairs with their forbidden diagonal, used as the
 * reference when reporting recovered constraints. */
struct ReferencePattern {
    // forbidden (a,b) tuples expected per pair, canonical i<j keys
    std::map<std::pair<int, int>, std::set<std::pair<int, int>>> forbidden;
};
ReferencePattern sudoku_reference();

/* Latin-square rows/columns plus the instance's inequality constraints
 * (value(a) > value(b) for dir=+1) as hard matrices, summed per pair. */
Gm futoshiki_rules(const Sample& s, int size = 5);

/* Cut model on the instance graph: per edge a 2x2 matrix, capacity on the
 * equal diagonal for max-cut (penalizes uncut edges) or on the unequal
 * off-diagonal for min-cut.  The caller conditions source/sink. */
Gm cut_model(const Sample& s, Task task, const std::vector<double>& capacities);

/* ---- fixed graph for the cut tasks ---- */

struct CutGraph {
    int n = 0;
    std::vector<std::array<int, 2>> edges;
    std::vector<int> antipode;  // vertex index of the opposite vertex
};
/* The truncated icosahedron (60 vertices, 90 edges, 3-regular), vertices
 * numbered in breadth-first order so that search by index sweeps the
 * surface contiguously.  Counts are asserted at construction. */
const CutGraph& soccer_ball();

/* Bridge categories, in feature order, with their capacities. */
inline constexpr int kNumBridgeKinds = 3;
inline constexpr double kBridgeCapacity[kNumBridgeKinds] = {5.0, 2.0, 1.0};  // stone, wood, rope

/* ---- generators ---- */

struct SudokuGenConfig {
    int count = 100;
    int target_hints = 25;
    bool many_solutions = false;  // drop below uniqueness, record the solution set
    int max_recorded_solutions = 32;
    std::uint64_t seed = 1;
};
Dataset gen_sudoku(const SudokuGenConfig& cfg);

struct FutoshikiGenConfig {
    int count = 100;
    int size = 5;
    double p_ineq = 0.3;  // probability per adjacent cell pair
    std::uint64_t seed = 1;
};
Dataset gen_futoshiki(const FutoshikiGenConfig& cfg);

struct CutGenConfig {
    int count = 100;
    bool maximize = false;
    std::uint64_t seed = 1;
};
Dataset gen_cut(const CutGenConfig& cfg);

/* Doubles a cut dataset: each sample is duplicated with all solution bits
 * flipped and source/sink swapped (both label the same cut). */
Dataset augment_flip(const Dataset& ds);

}  // namespace cfn
