#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfn/dataset.hpp"
#include "cfn/gm.hpp"
#include "cfn/mlp.hpp"

namespace cfn {

/* Static description of how a task maps onto a pairwise model. */
struct TaskShape {
    int n;            // variables
    int d;            // domain size
    int f_in;         // pair feature width
    int f_out;        // network output width (d*d, or 1 for the scalar capacity head)
    bool scalar_head; // cut tasks: softplus scalar times a fixed 2x2 pattern
};
TaskShape task_shape(Task task);

/* Pair feature encoding.
 * Grids: one-hot row and column of both cells (and for futoshiki one extra
 * slot, +1 when cell_i must exceed cell_j, -1 for the opposite, 0 if no
 * inequality ties the pair).  Cut graphs: one-hot bridge kind of the edge.
 * Features depend on (sample, i, j) only, never on the solution. */
void encode_pair_features(Task task, const Sample& s, int i, int j, double* out);

/* The learnable model: one shared network applied to every declared pair. */
struct Model {
    Task task = Task::Sudoku;
    TaskShape shape{};
    ResMlp net;
    std::uint64_t init_seed = 0;

    static Model create(Task task, std::uint64_t seed);
};

/* Enumerates the declared pairs of a sample's model: all i<j for grids, the
 * instance's edges for cuts.  Calls fn(i, j, features). */
template <class Fn>
void for_each_pair(Task task, const Sample& s, Fn&& fn) {
    const TaskShape shape = task_shape(task);
    std::vector<double> feats(std::size_t(shape.f_in));
    if (is_cut_task(task)) {
        for (const auto& e : s.edges) {
            encode_pair_features(task, s, e[0], e[1], feats.data());
            fn(e[0], e[1], feats.data());
        }
    } else {
        for (int i = 0; i < shape.n; ++i)
            for (int j = i + 1; j < shape.n; ++j) {
                encode_pair_features(task, s, i, j, feats.data());
                fn(i, j, feats.data());
            }
    }
}

double softplus(double x);
double softplus_derivative(double x);

/* Network output for one pair, already shaped as a cost matrix (scalar-head
 * tasks: softplus(raw) times the cut pattern for the sample's mode). */
Matrix predict_pair_matrix(const Model& model, const Sample& s, int i, int j);

/* Full predicted model for an instance: zero unaries, one predicted matrix
 * per declared pair, conditioned on the instance's observed variables
 * (sudoku hints; cut source/sink).  Set conditioned=false for the raw
 * model. */
Gm predict_gm(const Model& model, const Sample& s, bool conditioned = true);

/* Versioned checkpoint: network parameters plus training bookkeeping.
 * optimizer state is optional so exported models stay small. */
void save_checkpoint(const std::string& path, const Model& model, const Adam* adam);
Model load_checkpoint(const std::string& path, Adam* adam_out);

}  // namespace cfn
