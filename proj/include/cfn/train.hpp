#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfn/dataset.hpp"
#include "cfn/loss.hpp"
#include "cfn/neural.hpp"

namespace cfn {

enum class LossKind { Epll, Npll, SpoPlus };
LossKind loss_from_name(const std::string& name);
std::string loss_name(LossKind kind);

struct TrainConfig {
    LossKind loss = LossKind::Epll;  // Npll forces k = 0
    int k = 10;                      // muted neighbors per variable
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double l1 = 2e-4;
    int epochs = 100;
    double mask_solution_frac = 0.0;  // fraction of solution cells hidden, completed by impute
    std::uint64_t seed = 1;
    bool decoupled_decay = false;
    /* Many-solution grids: each visit trains on one of the first
     * max_train_solutions recorded solutions, picked per-visit. */
    int max_train_solutions = 5;
    std::int64_t impute_node_limit = 200000;
    std::int64_t eval_node_limit = 4000000;
    bool early_stop = true;  // stop once validation accuracy reaches 1
    bool verbose = false;    // progress lines on stderr
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double val_accuracy = -1.0;  // -1 when no validation set given
};

struct TrainResult {
    std::vector<EpochStats> epochs;
    bool stopped_early = false;
    double final_val_accuracy = -1.0;
};

/* Loss and parameter gradient of one sample: predicts the sample's model,
 * takes total_loss_and_grad over `scope` with the given masks, and chains
 * the per-pair cost gradients back into the shared network.  The gradient
 * accumulates into `grad` (size = net.param_count()). */
double sample_loss_grad(const Model& model, const Sample& s, const Assignment& y,
                        const MaskSet& masks, const std::vector<int>& scope, double l1,
                        std::vector<double>& grad);

/* Loss scope of a sample: every variable that is not observed by the
 * instance (non-hint cells; non-terminal vertices; all cells for tasks
 * without hints). */
std::vector<int> loss_scope(Task task, const Sample& s);

/* Pseudo-loglikelihood training: one Adam step per sample, sample order
 * reshuffled per epoch, masks redrawn per (epoch, sample) visit from
 * streams derived from cfg.seed so the trajectory is reproducible.  With
 * mask_solution_frac > 0, that fraction of each visit's scope cells is
 * hidden and completed by solving the current predicted model.  Validation
 * runs after every epoch when val is non-null. */
TrainResult train(Model& model, Adam& adam, const Dataset& train_ds, const Dataset* val,
                  const TrainConfig& cfg);

struct EvalOptions {
    std::optional<double> threshold_t;  // harden by thresholding before solving
    std::int64_t node_limit = 4000000;
};

/* Solves the sample's predicted (conditioned) model and returns the solver's
 * assignment, or nothing when the search found no finite-cost assignment. */
std::optional<Assignment> predict_solution(const Model& model, const Sample& s,
                                           const EvalOptions& opts = {});

/* Task-aware correctness of a predicted assignment:
 *  - sudoku: equals the stored solution, or any member of the recorded
 *    solution set when several are known;
 *  - futoshiki: satisfies the instance's ground-truth rules (instances are
 *    rarely uniquely solvable, so validity is the honest criterion);
 *  - cut tasks: achieves the stored solution's cost under the true
 *    capacities (optimal cuts need not be unique). */
bool assignment_correct(Task task, const Sample& s, const Assignment& y);

struct EvalResult {
    int total = 0;
    int correct = 0;
    double accuracy() const { return total == 0 ? 0.0 : double(correct) / double(total); }
};
EvalResult evaluate_model(const Model& model, const Dataset& ds, const EvalOptions& opts = {});

}  // namespace cfn
