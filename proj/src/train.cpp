#include "cfn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "cfn/harden.hpp"
#include "cfn/solver.hpp"
#include "cfn/tasks.hpp"

namespace cfn {

LossKind loss_from_name(const std::string& name) {
    if (name == "epll") return LossKind::Epll;
    if (name == "npll") return LossKind::Npll;
    if (name == "spo+" || name == "spoplus") return LossKind::SpoPlus;
    throw std::invalid_argument("unknown loss: " + name);
}

std::string loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::Epll: return "epll";
        case LossKind::Npll: return "npll";
        case LossKind::SpoPlus: return "spo+";
    }
    throw std::logic_error("loss_name: unknown kind");
}

std::vector<int> loss_scope(Task task, const Sample& s) {
    const Assignment h = s.hints(task);
    std::vector<int> scope;
    scope.reserve(h.size());
    for (int i = 0; i < int(h.size()); ++i)
        if (h[std::size_t(i)] == kUnset) scope.push_back(i);
    return scope;
}

namespace {

/* One batched network evaluation covering every declared pair of a sample,
 * with everything the backward pass needs (the tape references the
 * parameters it was computed on, so a stored SampleForward is only valid
 * until the next optimizer step). */
struct SampleForward {
    int batch = 0;
    std::vector<std::pair<int, int>> pairs;  // endpoints, in batch-row order
    std::vector<double> feats;               // batch x f_in
    std::vector<double> out;                 // batch x f_out
    std::vector<double> raw;                 // scalar-head pre-activations
    ResMlp::BatchTape tape;
};

Gm forward_gm(const Model& model, const Sample& s, SampleForward& fwd) {
    const TaskShape& shape = model.shape;
    Gm gm(std::vector<int>(std::size_t(shape.n), shape.d));
    fwd.pairs.clear();
    fwd.feats.clear();
    for_each_pair(model.task, s, [&](int i, int j, const double* feats) {
        fwd.pairs.emplace_back(i, j);
        fwd.feats.insert(fwd.feats.end(), feats, feats + shape.f_in);
    });
    fwd.batch = int(fwd.pairs.size());
    fwd.out.resize(std::size_t(fwd.batch) * std::size_t(shape.f_out));
    model.net.forward_batch(fwd.feats.data(), fwd.batch, fwd.out.data(), &fwd.tape);

    fwd.raw.assign(std::size_t(fwd.batch), 0.0);
    Matrix m(shape.d, shape.d);
    for (int p = 0; p < fwd.batch; ++p) {
        const double* o = fwd.out.data() + std::size_t(p) * std::size_t(shape.f_out);
        if (shape.scalar_head) {
            fwd.raw[std::size_t(p)] = o[0];
            const double c = softplus(o[0]);
            m.v.assign(m.v.size(), 0.0);
            if (model.task == Task::MaxCut) {
                m.at(0, 0) = c;
                m.at(1, 1) = c;
            } else {
                m.at(0, 1) = c;
                m.at(1, 0) = c;
            }
        } else {
            m.v.assign(o, o + shape.f_out);
        }
        gm.set_pair(fwd.pairs[std::size_t(p)].first, fwd.pairs[std::size_t(p)].second, m);
    }
    return gm;
}

/* Chains the cost-space gradient of the penalized loss back through the
 * shared network.  Accumulates into grad; returns the loss value. */
double loss_grad_on(const Model& model, const Gm& gm, const SampleForward& fwd,
                    const Assignment& y, const MaskSet& masks, const std::vector<int>& scope,
                    double l1, std::vector<double>& grad) {
    if (grad.size() != model.net.param_count())
        throw std::invalid_argument("loss gradient buffer has the wrong size");
    const auto [loss, lg] = total_loss_and_grad(gm, y, masks, scope, l1);
    const int d = model.shape.d;
    const std::size_t fo = std::size_t(model.shape.f_out);
    std::vector<double> d_out(std::size_t(fwd.batch) * fo);
    for (int p = 0; p < fwd.batch; ++p) {
        const auto [i, j] = fwd.pairs[std::size_t(p)];
        const std::pair<int, int> key = i < j ? std::pair<int, int>(i, j)
                                              : std::pair<int, int>(j, i);
        const Matrix& dm = lg.d_pairs.at(key);
        double* dr = d_out.data() + std::size_t(p) * fo;
        if (model.shape.scalar_head) {
            // both cut patterns are symmetric, so orientation cannot matter
            const double d_cap = model.task == Task::MaxCut ? dm.at(0, 0) + dm.at(1, 1)
                                                            : dm.at(0, 1) + dm.at(1, 0);
            dr[0] = d_cap * softplus_derivative(fwd.raw[std::size_t(p)]);
        } else if (i < j) {
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) dr[std::size_t(a) * std::size_t(d) + std::size_t(b)] = dm.at(a, b);
        } else {
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) dr[std::size_t(a) * std::size_t(d) + std::size_t(b)] = dm.at(b, a);
        }
    }
    model.net.backward_batch(fwd.tape, d_out.data(), grad);
    return loss;
}

}  // namespace

double sample_loss_grad(const Model& model, const Sample& s, const Assignment& y,
                        const MaskSet& masks, const std::vector<int>& scope, double l1,
                        std::vector<double>& grad) {
    SampleForward fwd;
    const Gm gm = forward_gm(model, s, fwd);
    return loss_grad_on(model, gm, fwd, y, masks, scope, l1, grad);
}

TrainResult train(Model& model, Adam& adam, const Dataset& train_ds, const Dataset* val,
                  const TrainConfig& cfg) {
    if (train_ds.samples.empty()) throw std::invalid_argument("train: empty training set");
    if (model.task != train_ds.task) throw std::invalid_argument("train: model/dataset task mismatch");
    if (cfg.loss == LossKind::SpoPlus)
        throw std::invalid_argument("train: spo+ applies to the decision-focused pipeline only");
    const int n = model.shape.n;
    const int k = cfg.loss == LossKind::Npll ? 0 : cfg.k;
    if (k < 0 || k > n - 1) throw std::invalid_argument("train: k out of range");

    TrainResult result;
    std::vector<int> order(train_ds.samples.size());
    std::iota(order.begin(), order.end(), 0);
    SampleForward fwd;
    std::vector<double> grad(model.net.param_count(), 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(Rng::mix(cfg.seed, 1), std::uint64_t(epoch)));
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;

        for (const int idx : order) {
            const Sample& s = train_ds.samples[std::size_t(idx)];
            /* Every (epoch, sample) visit owns a stream, so the trajectory
             * does not depend on how many draws earlier visits consumed. */
            Rng visit_rng(
                Rng::mix(Rng::mix(Rng::mix(cfg.seed, 2), std::uint64_t(epoch)), std::uint64_t(idx)));

            Assignment y = s.solution;
            if (s.solutions.size() > 1) {
                const int pool = std::min<int>(cfg.max_train_solutions, int(s.solutions.size()));
                y = s.solutions[std::size_t(visit_rng.below(std::uint64_t(pool)))];
            }

            const std::vector<int> scope = loss_scope(model.task, s);
            const Gm gm = forward_gm(model, s, fwd);

            if (cfg.mask_solution_frac > 0.0) {
                const int hide = int(std::lround(cfg.mask_solution_frac * double(scope.size())));
                if (hide > 0) {
                    std::vector<int> cells = scope;
                    visit_rng.shuffle(cells);
                    Assignment partial = y;
                    for (int t = 0; t < hide; ++t) partial[std::size_t(cells[std::size_t(t)])] = kUnset;
                    SolveLimits lim;
                    lim.node_limit = cfg.impute_node_limit;
                    y = impute(gm, partial, lim);
                }
            }

            const MaskSet masks = k > 0 ? sample_masks(n, k, visit_rng) : MaskSet::empty(n);
            std::fill(grad.begin(), grad.end(), 0.0);
            loss_sum += loss_grad_on(model, gm, fwd, y, masks, scope, cfg.l1, grad);
            adam.step(model.net.params(), grad);
        }

        EpochStats st;
        st.epoch = epoch;
        st.mean_loss = loss_sum / double(order.size());
        if (val) {
            EvalOptions eo;
            eo.node_limit = cfg.eval_node_limit;
            st.val_accuracy = evaluate_model(model, *val, eo).accuracy();
            result.final_val_accuracy = st.val_accuracy;
        }
        result.epochs.push_back(st);
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %3d  mean_loss %11.6f  val_accuracy %s\n", epoch,
                         st.mean_loss,
                         val ? std::to_string(st.val_accuracy).c_str() : "n/a");
        if (val && cfg.early_stop && st.val_accuracy >= 1.0) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

std::optional<Assignment> predict_solution(const Model& model, const Sample& s,
                                           const EvalOptions& opts) {
    Gm gm = predict_gm(model, s, /*conditioned=*/true);
    if (opts.threshold_t) gm = threshold(gm, *opts.threshold_t);
    SolveLimits lim;
    lim.node_limit = opts.node_limit;
    const SolveResult r = solve(gm, lim);
    if (!r.feasible) return std::nullopt;
    return r.assignment;
}

bool assignment_correct(Task task, const Sample& s, const Assignment& y) {
    switch (task) {
        case Task::Sudoku: {
            if (y == s.solution) return true;
            for (const auto& alt : s.solutions)
                if (y == alt) return true;
            return false;
        }
        case Task::Futoshiki:
            /* Instances are not uniquely solvable in general, so a prediction
             * counts when it satisfies the ground-truth rules. */
            return evaluate(futoshiki_rules(s, s.size > 0 ? s.size : 5), y) == 0.0;
        case Task::MinCut:
        case Task::MaxCut: {
            // optimal cuts need not be unique: compare true costs instead
            const Gm truth = cut_model(s, task, s.capacities);
            return evaluate(truth, y) <= evaluate(truth, s.solution) + 1e-9;
        }
    }
    return false;
}

EvalResult evaluate_model(const Model& model, const Dataset& ds, const EvalOptions& opts) {
    EvalResult r;
    r.total = int(ds.samples.size());
    for (const auto& s : ds.samples) {
        const auto y = predict_solution(model, s, opts);
        if (y && assignment_correct(ds.task, s, *y)) ++r.correct;
    }
    return r;
}

}  // namespace cfn
