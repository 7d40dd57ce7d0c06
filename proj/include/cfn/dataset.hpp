#pragma once

#include <array>
#include <string>
#include <vector>

#include "cfn/gm.hpp"

namespace cfn {

enum class Task { Sudoku, Futoshiki, MinCut, MaxCut };

Task task_from_name(const std::string& name);
std::string task_name(Task t);
bool is_cut_task(Task t);

/* One labeled instance of any task.  Puzzle tasks fill the grid fields; cut
 * tasks fill the graph fields.  Values inside assignments are 0-based
 * indices everywhere; serialization converts to the human conventions
 * (digits for grids, bits for cuts). */
struct Sample {
    // sudoku: 81 chars, '0' or '.' for empty cells
    std::string puzzle;
    Assignment solution;
    std::vector<Assignment> solutions;  // known alternative solutions (many-solution data)

    // futoshiki
    int size = 0;
    struct Ineq { int a = 0, b = 0, dir = 0; };  // dir=+1: value(a) > value(b); -1: <
    std::vector<Ineq> inequalities;

    // cut
    int source = -1, sink = -1;
    std::vector<std::array<int, 3>> edges;  // u, v, category index
    std::vector<double> capacities;         // ground-truth capacity per edge

    /* Observed variables of the instance: hint cells for sudoku, the
     * source/sink endpoints for cuts, nothing for futoshiki. */
    Assignment hints(Task task) const;
};

struct Dataset {
    Task task = Task::Sudoku;
    std::vector<Sample> samples;
};

Dataset load_dataset(const std::string& path, Task task);
void save_dataset(const Dataset& ds, const std::string& path);

// 81-char digit string <-> 0-based assignment ('0'/'.' become kUnset)
Assignment parse_grid81(const std::string& s);
std::string format_grid81(const Assignment& y);

}  // namespace cfn
