#include "cfn/dfl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "cfn/loss.hpp"
#include "cfn/solver.hpp"
#include "cfn/tasks.hpp"

namespace cfn {

std::vector<double> paid_edges(Task task, const Sample& s, const Assignment& y) {
    if (!is_cut_task(task)) throw std::invalid_argument("paid_edges: cut tasks only");
    std::vector<double> phi(s.edges.size(), 0.0);
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        const bool cut = y[std::size_t(s.edges[e][0])] != y[std::size_t(s.edges[e][1])];
        phi[e] = (task == Task::MinCut ? cut : !cut) ? 1.0 : 0.0;
    }
    return phi;
}

double cut_objective(Task task, const Sample& s, const std::vector<double>& c,
                     const Assignment& y) {
    if (c.size() != s.edges.size())
        throw std::invalid_argument("cut_objective: one capacity per edge required");
    const std::vector<double> phi = paid_edges(task, s, y);
    return std::inner_product(c.begin(), c.end(), phi.begin(), 0.0);
}

std::vector<double> predicted_capacities(const Model& model, const Sample& s) {
    if (!is_cut_task(model.task))
        throw std::invalid_argument("predicted_capacities: cut tasks only");
    std::vector<double> caps;
    caps.reserve(s.edges.size());
    std::vector<double> out(1);
    for_each_pair(model.task, s, [&](int, int, const double* feats) {
        model.net.forward(feats, out.data(), nullptr);
        caps.push_back(softplus(out[0]));
    });
    return caps;
}

namespace {

/* Exact minimizer of the given capacities, source/sink pinned.  warm_value,
 * when finite, must be the objective of some feasible assignment; the search
 * then starts just above it. */
Assignment solve_cut(Task task, const Sample& s, const std::vector<double>& c,
                     const Assignment* warm, double warm_value) {
    const Gm gm = condition(cut_model(s, task, c), s.hints(task));
    SolveLimits lim;
    if (warm) lim.upper_bound = warm_value + 1e-9;
    const SolveResult r = solve(gm, lim);
    if (r.feasible) return r.assignment;
    if (warm) return *warm;  // nothing beats the warm assignment: it is optimal
    throw std::runtime_error("solve_cut: infeasible cut model");
}

}  // namespace

double regret(Task task, const Sample& s, const std::vector<double>& c_pred,
              const std::vector<double>& c_true) {
    if (c_pred.size() != c_true.size() || c_pred.size() != s.edges.size())
        throw std::invalid_argument("regret: one capacity per edge required");
    for (double v : c_pred)
        if (!std::isfinite(v)) throw std::invalid_argument("regret: non-finite capacity");
    for (double v : c_true)
        if (!std::isfinite(v)) throw std::invalid_argument("regret: non-finite capacity");
    const Assignment y_pred = solve_cut(task, s, c_pred, nullptr, 0.0);
    const Assignment y_true = solve_cut(task, s, c_true, nullptr, 0.0);
    return std::abs(cut_objective(task, s, c_true, y_pred) -
                    cut_objective(task, s, c_true, y_true));
}

double spo_plus_loss(Task task, const Sample& s, const std::vector<double>& c_pred,
                     const std::vector<double>& c_true, const Assignment& y_true) {
    std::vector<double> c_spo(c_pred.size());
    for (std::size_t e = 0; e < c_pred.size(); ++e) c_spo[e] = 2.0 * c_pred[e] - c_true[e];
    const Assignment y_deg = solve_cut(task, s, c_spo, nullptr, 0.0);
    return -cut_objective(task, s, c_spo, y_deg) + 2.0 * cut_objective(task, s, c_pred, y_true) -
           cut_objective(task, s, c_true, y_true);
}

std::vector<double> spo_plus_grad(Task task, const Sample& s, const std::vector<double>& c_pred,
                                  const std::vector<double>& c_true, const Assignment& y_true) {
    std::vector<double> c_spo(c_pred.size());
    for (std::size_t e = 0; e < c_pred.size(); ++e) c_spo[e] = 2.0 * c_pred[e] - c_true[e];
    const double warm = cut_objective(task, s, c_spo, y_true);
    const Assignment y_deg = solve_cut(task, s, c_spo, &y_true, warm);
    const std::vector<double> phi_true = paid_edges(task, s, y_true);
    const std::vector<double> phi_deg = paid_edges(task, s, y_deg);
    std::vector<double> g(c_pred.size());
    for (std::size_t e = 0; e < g.size(); ++e) g[e] = 2.0 * (phi_true[e] - phi_deg[e]);
    return g;
}

namespace {

struct EdgeForward {
    ResMlp::Tape tape;
    double raw = 0.0;
};

/* Forward over the instance's edges, keeping tapes and pre-activations. */
std::vector<double> forward_capacities(const Model& model, const Sample& s,
                                       std::vector<EdgeForward>& fwd) {
    std::vector<double> caps;
    caps.reserve(s.edges.size());
    std::vector<double> out(1);
    std::size_t idx = 0;
    for_each_pair(model.task, s, [&](int, int, const double* feats) {
        if (idx == fwd.size()) fwd.emplace_back();
        EdgeForward& ef = fwd[idx++];
        model.net.forward(feats, out.data(), &ef.tape);
        ef.raw = out[0];
        caps.push_back(softplus(out[0]));
    });
    fwd.resize(idx);
    return caps;
}

/* d(loss)/d(capacity) chained through softplus into the parameter gradient. */
void backward_capacities(const Model& model, const std::vector<EdgeForward>& fwd,
                         const std::vector<double>& d_caps, std::vector<double>& grad) {
    for (std::size_t e = 0; e < fwd.size(); ++e) {
        const double d_raw = d_caps[e] * softplus_derivative(fwd[e].raw);
        model.net.backward(fwd[e].tape, &d_raw, grad);
    }
}

}  // namespace

double spo_plus_step(Model& model, Adam& adam, const Sample& s) {
    const Task task = model.task;
    std::vector<EdgeForward> fwd;
    const std::vector<double> c_pred = forward_capacities(model, s, fwd);
    const std::vector<double>& c_true = s.capacities;
    std::vector<double> c_spo(c_pred.size());
    for (std::size_t e = 0; e < c_pred.size(); ++e) c_spo[e] = 2.0 * c_pred[e] - c_true[e];

    const double warm = cut_objective(task, s, c_spo, s.solution);
    const Assignment y_deg = solve_cut(task, s, c_spo, &s.solution, warm);
    const double loss = -cut_objective(task, s, c_spo, y_deg) +
                        2.0 * cut_objective(task, s, c_pred, s.solution) -
                        cut_objective(task, s, c_true, s.solution);

    const std::vector<double> phi_true = paid_edges(task, s, s.solution);
    const std::vector<double> phi_deg = paid_edges(task, s, y_deg);
    std::vector<double> d_caps(c_pred.size());
    for (std::size_t e = 0; e < d_caps.size(); ++e) d_caps[e] = 2.0 * (phi_true[e] - phi_deg[e]);

    std::vector<double> grad(model.net.param_count(), 0.0);
    backward_capacities(model, fwd, d_caps, grad);
    adam.step(model.net.params(), grad);
    return loss;
}

double mean_regret(const Model& model, const Dataset& ds) {
    if (!is_cut_task(ds.task)) throw std::invalid_argument("mean_regret: cut tasks only");
    if (ds.samples.empty()) throw std::invalid_argument("mean_regret: empty dataset");
    double sum = 0.0;
    for (const Sample& s : ds.samples) {
        const std::vector<double> c_pred = predicted_capacities(model, s);
        const double warm = cut_objective(ds.task, s, c_pred, s.solution);
        const Assignment y = solve_cut(ds.task, s, c_pred, &s.solution, warm);
        sum += cut_objective(ds.task, s, s.capacities, y) -
               cut_objective(ds.task, s, s.capacities, s.solution);
    }
    return sum / double(ds.samples.size());
}

DflResult run_dfl_experiment(const DflConfig& cfg) {
    if (!is_cut_task(cfg.task)) throw std::invalid_argument("run_dfl_experiment: cut tasks only");
    if (cfg.loss == LossKind::Npll)
        throw std::invalid_argument("run_dfl_experiment: loss must be epll or spo+");

    CutGenConfig gen;
    gen.maximize = cfg.task == Task::MaxCut;
    gen.count = cfg.train_count;
    gen.seed = Rng::mix(cfg.seed, 0xd1f1);
    const Dataset train_ds = augment_flip(gen_cut(gen));
    gen.count = cfg.test_count;
    gen.seed = Rng::mix(cfg.seed, 0xd1f2);
    const Dataset test_ds = gen_cut(gen);

    Model model = Model::create(cfg.task, cfg.seed);
    AdamConfig ac;
    ac.lr = cfg.loss == LossKind::SpoPlus ? cfg.lr_spo : cfg.lr_epll;
    ac.weight_decay = cfg.weight_decay;
    Adam adam(model.net.param_count(), ac);

    DflResult result;
    auto record = [&](int seen) {
        const double r = mean_regret(model, test_ds);
        result.curve.push_back({seen, r});
        if (result.first_zero_at < 0 && r <= 1e-12) result.first_zero_at = seen;
        if (cfg.verbose)
            std::fprintf(stderr, "[%s/%s] seen %4d  mean regret %.6f\n",
                         task_name(cfg.task).c_str(), loss_name(cfg.loss).c_str(), seen, r);
    };
    record(0);

    std::vector<int> order(train_ds.samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(model.net.param_count(), 0.0);
    int seen = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(Rng::mix(cfg.seed, 1), std::uint64_t(epoch)));
        shuffle_rng.shuffle(order);
        for (const int idx : order) {
            const Sample& s = train_ds.samples[std::size_t(idx)];
            if (cfg.loss == LossKind::SpoPlus) {
                spo_plus_step(model, adam, s);
            } else {
                Rng visit_rng(Rng::mix(Rng::mix(Rng::mix(cfg.seed, 2), std::uint64_t(epoch)),
                                       std::uint64_t(idx)));
                const MaskSet masks = cfg.k > 0
                                          ? sample_masks(model.shape.n, cfg.k, visit_rng)
                                          : MaskSet::empty(model.shape.n);
                std::fill(grad.begin(), grad.end(), 0.0);
                sample_loss_grad(model, s, s.solution, masks, loss_scope(cfg.task, s), cfg.l1,
                                 grad);
                adam.step(model.net.params(), grad);
            }
            ++seen;
            if (seen % cfg.eval_every == 0) record(seen);
        }
    }
    if (result.curve.empty() || result.curve.back().samples_seen != seen) record(seen);

    for (std::size_t p = 1; p < result.curve.size(); ++p) {
        const auto& a = result.curve[p - 1];
        const auto& b = result.curve[p];
        result.aurc += 0.5 * (a.mean_test_regret + b.mean_test_regret) *
                       double(b.samples_seen - a.samples_seen);
    }
    return result;
}

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "samples_seen,mean_test_regret,seed,loss_name\n";
    for (const auto& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%llu,", r.samples_seen, r.mean_test_regret,
                      static_cast<unsigned long long>(r.seed));
        out << buf << r.loss << '\n';
    }
}

}  // namespace cfn
