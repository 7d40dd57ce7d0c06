#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfn/dataset.hpp"
#include "cfn/neural.hpp"
#include "cfn/train.hpp"

namespace cfn {

/* Per-edge payment indicator of an assignment under the task's objective:
 * min-cut pays for cut edges, max-cut pays for uncut edges (maximizing the
 * cut equals minimizing the uncut capacity). */
std::vector<double> paid_edges(Task task, const Sample& s, const Assignment& y);

// sum_e c[e] * paid_edges(y)[e]
double cut_objective(Task task, const Sample& s, const std::vector<double>& c,
                     const Assignment& y);

/* softplus capacity the network assigns to each edge of the instance. */
std::vector<double> predicted_capacities(const Model& model, const Sample& s);

/* Extra true cost incurred by optimizing the predicted capacities instead of
 * the true ones.  Solves both models (source/sink pinned); >= 0, and 0 iff
 * the predicted optimizer is also optimal under the true capacities. */
double regret(Task task, const Sample& s, const std::vector<double>& c_pred,
              const std::vector<double>& c_true);

/* Convex surrogate of regret for a linear objective: with phi the payment
 * map and y* optimal under c_true,
 *
 *   loss = -min_y (2c_pred - c_true)'phi(y) + 2 c_pred'phi(y*) - c_true'phi(y*)
 *
 * The subgradient is 2(phi(y*) - phi(y_deg)) with y_deg the minimizer of the
 * 2c_pred - c_true objective; it vanishes when that minimizer coincides with
 * y* under the solver's deterministic tie-breaking. */
double spo_plus_loss(Task task, const Sample& s, const std::vector<double>& c_pred,
                     const std::vector<double>& c_true, const Assignment& y_true);
std::vector<double> spo_plus_grad(Task task, const Sample& s, const std::vector<double>& c_pred,
                                  const std::vector<double>& c_true, const Assignment& y_true);

/* One optimizer step on the surrogate's subgradient, chained through the
 * capacity head.  Returns the surrogate loss before the step. */
double spo_plus_step(Model& model, Adam& adam, const Sample& s);

/* Mean regret of the model's predicted capacities over a cut dataset; true
 * optimal values are read from the stored solutions. */
double mean_regret(const Model& model, const Dataset& ds);

struct DflConfig {
    Task task = Task::MinCut;
    LossKind loss = LossKind::Epll;  // Epll or SpoPlus
    int train_count = 50;            // doubled by the flip augmentation
    int test_count = 50;
    int epochs = 10;
    int eval_every = 25;  // in training-sample visits
    int k = 10;           // epll muted neighbors
    double lr_epll = 1e-3;
    double lr_spo = 1e-4;
    double weight_decay = 1e-4;
    double l1 = 2e-4;
    std::uint64_t seed = 1;
    bool verbose = false;
};

struct CurvePoint {
    int samples_seen = 0;
    double mean_test_regret = 0.0;
};

struct DflResult {
    std::vector<CurvePoint> curve;  // includes the untrained samples_seen=0 point
    double aurc = 0.0;              // trapezoid over samples_seen
    int first_zero_at = -1;         // samples_seen of the first zero-regret point, -1 if none
};

/* Trains the scalar-head capacity predictor with the configured loss on
 * generated instances (train and test sets derive deterministically from
 * cfg.seed, identically for both losses) and records the mean test regret
 * every eval_every visits. */
DflResult run_dfl_experiment(const DflConfig& cfg);

struct CurveRow {
    int samples_seen = 0;
    double mean_test_regret = 0.0;
    std::uint64_t seed = 0;
    std::string loss;
};
void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows);

}  // namespace cfn
