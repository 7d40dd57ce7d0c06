#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfn/dfl.hpp"
#include "cfn/harden.hpp"
#include "cfn/neural.hpp"
#include "cfn/solver.hpp"
#include "cfn/tasks.hpp"
#include "cfn/train.hpp"

using namespace cfn;

namespace {

/* "sudoku-many" is a CLI-level alias: the sudoku task with the
 * many-solution generator/metrics. */
Task parse_task(const std::string& name, bool* many = nullptr) {
    if (many) *many = name == "sudoku-many";
    return task_from_name(name == "sudoku-many" ? "sudoku" : name);
}

const std::vector<std::string> kTaskNames = {"sudoku", "sudoku-many", "futoshiki", "mincut",
                                             "maxcut"};

Assignment parse_assign_list(const std::string& text, int n) {
    Assignment partial(std::size_t(n), kUnset);
    if (text.empty()) return partial;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        const std::string item = text.substr(pos, end - pos);
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--assign expects i=v pairs separated by commas");
        const int var = std::stoi(item.substr(0, eq));
        const int val = std::stoi(item.substr(eq + 1));
        if (var < 0 || var >= n) throw std::invalid_argument("--assign: variable out of range");
        partial[std::size_t(var)] = val;
        pos = end + 1;
    }
    return partial;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

/* Sudoku pair features ignore the instance, so one predicted model serves
 * every grid; used by harden and export. */
Gm sudoku_shared_gm(const Model& model) {
    Sample blank;
    blank.puzzle = std::string(81, '0');
    return predict_gm(model, blank, /*conditioned=*/false);
}

std::vector<Assignment> training_solutions(const Dataset& ds, int per_sample_cap) {
    std::vector<Assignment> out;
    for (const Sample& s : ds.samples) {
        if (s.solutions.size() > 1) {
            const std::size_t take = std::min<std::size_t>(std::size_t(per_sample_cap),
                                                           s.solutions.size());
            for (std::size_t i = 0; i < take; ++i) out.push_back(s.solutions[i]);
        } else {
            out.push_back(s.solution);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairwise cost-model learning: generate, train, evaluate, harden, solve"};
    app.set_config("--config", "", "TOML file with per-subcommand option defaults");
    app.require_subcommand(1);
    int rc = 0;

    /* ---- gen ---- */
    auto* gen = app.add_subcommand("gen", "generate a labeled dataset");
    struct {
        std::string task, out;
        int count = 100;
        std::uint64_t seed = 1;
        int target_hints = -1;
        int max_solutions = 32;
        int size = 5;
        double p_ineq = 0.3;
    } g;
    gen->add_option("--task", g.task, "task name")->required()->check(CLI::IsMember(kTaskNames));
    gen->add_option("--out", g.out, "output dataset (jsonl)")->required();
    gen->add_option("--count", g.count, "number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--seed", g.seed, "rng seed");
    gen->add_option("--target-hints", g.target_hints,
                    "sudoku: hints to keep (default 25, or 20 for sudoku-many)");
    gen->add_option("--max-solutions", g.max_solutions,
                    "sudoku-many: cap on the recorded solution set");
    gen->add_option("--size", g.size, "futoshiki grid size");
    gen->add_option("--p-ineq", g.p_ineq, "futoshiki inequality probability per adjacent pair");
    gen->callback([&]() {
        bool many = false;
        const Task task = parse_task(g.task, &many);
        Dataset ds;
        if (task == Task::Sudoku) {
            SudokuGenConfig cfg;
            cfg.count = g.count;
            cfg.seed = g.seed;
            cfg.many_solutions = many;
            cfg.target_hints = g.target_hints >= 0 ? g.target_hints : (many ? 20 : 25);
            cfg.max_recorded_solutions = g.max_solutions;
            ds = gen_sudoku(cfg);
        } else if (task == Task::Futoshiki) {
            FutoshikiGenConfig cfg;
            cfg.count = g.count;
            cfg.seed = g.seed;
            cfg.size = g.size;
            cfg.p_ineq = g.p_ineq;
            ds = gen_futoshiki(cfg);
        } else {
            CutGenConfig cfg;
            cfg.count = g.count;
            cfg.seed = g.seed;
            cfg.maximize = task == Task::MaxCut;
            ds = gen_cut(cfg);
        }
        save_dataset(ds, g.out);
        std::printf("wrote %zu %s samples to %s\n", ds.samples.size(), g.task.c_str(),
                    g.out.c_str());
    });

    /* ---- train ---- */
    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    struct {
        std::string task, data, val, out, log, loss = "epll";
        int k = 10;
        double lr = -1.0;
        double l1 = 2e-4;
        double weight_decay = 1e-4;
        int epochs = -1;
        double mask_solution_frac = 0.0;
        std::uint64_t seed = 1;
        bool decoupled = false;
        bool no_early_stop = false;
        bool quiet = false;
    } t;
    tr->add_option("--task", t.task, "task name")->required()->check(CLI::IsMember(kTaskNames));
    tr->add_option("--data", t.data, "training dataset (jsonl)")->required();
    tr->add_option("--val", t.val, "validation dataset (jsonl)");
    tr->add_option("--out", t.out, "checkpoint output path")->required();
    tr->add_option("--log", t.log, "per-epoch csv log (default: <out>.log.csv)");
    tr->add_option("--loss", t.loss, "epll | npll | spo+")
        ->check(CLI::IsMember({"epll", "npll", "spo+"}));
    tr->add_option("--k", t.k, "muted context variables per conditional");
    tr->add_option("--lr", t.lr, "learning rate (default 1e-3; 1e-4 for spo+)");
    tr->add_option("--l1", t.l1, "sparsity penalty on pairwise costs");
    tr->add_option("--weight-decay", t.weight_decay, "optimizer weight decay");
    tr->add_option("--epochs", t.epochs, "epoch budget (default 100; 10 for cut tasks)");
    tr->add_option("--mask-solution-frac", t.mask_solution_frac,
                   "fraction of solution cells hidden and re-imputed per visit");
    tr->add_option("--seed", t.seed, "rng seed");
    tr->add_flag("--decoupled-decay", t.decoupled, "decay weights after the adaptive step");
    tr->add_flag("--no-early-stop", t.no_early_stop, "ignore full validation accuracy");
    tr->add_flag("--quiet", t.quiet, "suppress per-epoch progress on stderr");
    tr->callback([&]() {
        bool many = false;
        const Task task = parse_task(t.task, &many);
        const LossKind loss = loss_from_name(t.loss);
        const Dataset train_ds = load_dataset(t.data, task);
        std::optional<Dataset> val_ds;
        if (!t.val.empty()) val_ds = load_dataset(t.val, task);
        const int epochs = t.epochs > 0 ? t.epochs : (is_cut_task(task) ? 10 : 100);
        const std::string log_path = t.log.empty() ? t.out + ".log.csv" : t.log;

        Model model = Model::create(task, t.seed);
        AdamConfig ac;
        ac.lr = t.lr > 0 ? t.lr : (loss == LossKind::SpoPlus ? 1e-4 : 1e-3);
        ac.weight_decay = t.weight_decay;
        ac.decoupled_decay = t.decoupled;
        Adam adam(model.net.param_count(), ac);

        std::string log = "epoch,mean_loss,val_accuracy\n";
        if (loss == LossKind::SpoPlus) {
            if (!is_cut_task(task))
                throw std::invalid_argument("--loss spo+ applies to cut tasks only");
            std::vector<int> order(train_ds.samples.size());
            std::iota(order.begin(), order.end(), 0);
            for (int epoch = 0; epoch < epochs; ++epoch) {
                Rng shuffle_rng(Rng::mix(Rng::mix(t.seed, 1), std::uint64_t(epoch)));
                shuffle_rng.shuffle(order);
                double loss_sum = 0.0;
                for (const int idx : order)
                    loss_sum += spo_plus_step(model, adam, train_ds.samples[std::size_t(idx)]);
                const double mean_loss = loss_sum / double(order.size());
                const double val_reg = val_ds ? mean_regret(model, *val_ds) : -1.0;
                char line[128];
                std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", epoch, mean_loss,
                              val_ds ? 1.0 * (val_reg == 0.0) : -1.0);
                log += line;
                if (!t.quiet)
                    std::fprintf(stderr, "epoch %3d  mean_loss %11.6f  val_regret %s\n", epoch,
                                 mean_loss, val_ds ? std::to_string(val_reg).c_str() : "n/a");
            }
        } else {
            TrainConfig cfg;
            cfg.loss = loss;
            cfg.k = t.k;
            cfg.lr = ac.lr;
            cfg.weight_decay = t.weight_decay;
            cfg.l1 = t.l1;
            cfg.epochs = epochs;
            cfg.mask_solution_frac = t.mask_solution_frac;
            cfg.seed = t.seed;
            cfg.decoupled_decay = t.decoupled;
            cfg.early_stop = !t.no_early_stop;
            cfg.verbose = !t.quiet;
            const TrainResult res =
                train(model, adam, train_ds, val_ds ? &*val_ds : nullptr, cfg);
            for (const EpochStats& st : res.epochs) {
                char line[128];
                std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", st.epoch, st.mean_loss,
                              st.val_accuracy);
                log += line;
            }
            if (res.stopped_early)
                std::printf("stopped early at full validation accuracy (epoch %zu)\n",
                            res.epochs.size() - 1);
        }
        save_checkpoint(t.out, model, &adam);
        write_text(log_path, log);
        std::printf("checkpoint written to %s (log: %s)\n", t.out.c_str(), log_path.c_str());
    });

    /* ---- eval ---- */
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    struct {
        std::string task, checkpoint, data, out;
        double threshold = 0.0;
        std::int64_t node_limit = 4000000;
    } e;
    ev->add_option("--task", e.task, "task name")->required()->check(CLI::IsMember(kTaskNames));
    ev->add_option("--checkpoint", e.checkpoint, "model checkpoint")->required();
    ev->add_option("--data", e.data, "evaluation dataset (jsonl)")->required();
    ev->add_option("--out", e.out, "metrics report (json)");
    ev->add_option("--threshold", e.threshold, "harden costs >= t to top before solving");
    ev->add_option("--node-limit", e.node_limit, "search budget per instance");
    ev->callback([&]() {
        bool many = false;
        const Task task = parse_task(e.task, &many);
        const Model model = load_checkpoint(e.checkpoint, nullptr);
        if (model.task != task)
            throw std::invalid_argument("checkpoint was trained for task " +
                                        task_name(model.task));
        const Dataset ds = load_dataset(e.data, task);
        EvalOptions opts;
        opts.node_limit = e.node_limit;
        if (e.threshold > 0) opts.threshold_t = e.threshold;
        const EvalResult res = evaluate_model(model, ds, opts);

        nlohmann::json doc;
        doc["task"] = e.task;
        doc["total"] = res.total;
        doc["correct"] = res.correct;
        doc["accuracy"] = res.accuracy();
        std::printf("%d/%d correct (%.2f%%)\n", res.correct, res.total, 100.0 * res.accuracy());
        if (task == Task::Sudoku) {
            Gm gm = sudoku_shared_gm(model);
            if (e.threshold > 0) gm = threshold(gm, e.threshold);
            const ReferencePattern ref = sudoku_reference();
            const ConstraintReport rep = constraint_report(gm, &ref);
            doc["constraints"] = {{"forbidden_tuples", rep.forbidden_tuples},
                                  {"pairs_with_constraints", rep.pairs_with_constraints},
                                  {"exact_pairs", rep.exact_pairs},
                                  {"missed_pairs", rep.missed_pairs},
                                  {"false_pairs", rep.false_pairs},
                                  {"false_tuples", rep.false_tuples},
                                  {"missed_tuples", rep.missed_tuples}};
            std::printf("%s\n", rep.summary().c_str());
        }
        if (is_cut_task(task)) {
            const double reg = mean_regret(model, ds);
            doc["mean_regret"] = reg;
            std::printf("mean regret %.6f\n", reg);
        }
        if (!e.out.empty()) write_text(e.out, doc.dump(2) + "\n");
    });

    /* ---- solve ---- */
    auto* so = app.add_subcommand("solve", "solve an exported cost model");
    struct {
        std::string cfn, grid, assign;
        std::int64_t node_limit = 0;
    } s;
    so->add_option("--cfn", s.cfn, "cost model (json)")->required();
    so->add_option("--grid", s.grid, "81-character hint string ('0' or '.' = empty)");
    so->add_option("--assign", s.assign, "comma-separated i=v observations");
    so->add_option("--node-limit", s.node_limit, "search budget (0 = exact)");
    so->callback([&]() {
        Gm gm = load_cfn(s.cfn);
        if (!s.grid.empty()) {
            if (gm.n() != 81)
                throw std::invalid_argument("--grid requires an 81-variable model");
            gm = condition(gm, parse_grid81(s.grid));
        }
        if (!s.assign.empty()) gm = condition(gm, parse_assign_list(s.assign, gm.n()));
        SolveLimits lim;
        if (s.node_limit > 0) lim.node_limit = s.node_limit;
        const SolveResult r = solve(gm, lim);
        if (!r.feasible) {
            std::fprintf(stderr, "infeasible: no assignment below top\n");
            rc = 1;
            return;
        }
        bool grid_shape = gm.n() == 81;
        for (int i = 0; grid_shape && i < gm.n(); ++i) grid_shape = gm.domain(i) == 9;
        if (grid_shape) {
            std::printf("%s\n", format_grid81(r.assignment).c_str());
        } else {
            nlohmann::json arr = r.assignment;
            std::printf("%s\n", arr.dump().c_str());
        }
        std::fprintf(stderr, "cost %.6f (%s, %lld nodes)\n", r.cost,
                     r.proven_optimal ? "proven optimal" : "search truncated",
                     static_cast<long long>(r.nodes));
    });

    /* ---- harden ---- */
    auto* ha = app.add_subcommand("harden", "turn learned costs into hard constraints");
    struct {
        std::string checkpoint, data, out;
        int check_every = 100;
        int max_train_solutions = 5;
    } h;
    ha->add_option("--checkpoint", h.checkpoint, "sudoku model checkpoint")->required();
    ha->add_option("--data", h.data, "training dataset (jsonl)")->required();
    ha->add_option("--out", h.out, "hardened cost model output (json)")->required();
    ha->add_option("--check-every", h.check_every, "hardenings per feasibility check");
    ha->add_option("--max-train-solutions", h.max_train_solutions,
                   "per-sample cap on recorded solutions treated as training data");
    ha->callback([&]() {
        const Model model = load_checkpoint(h.checkpoint, nullptr);
        if (model.task != Task::Sudoku)
            throw std::invalid_argument(
                "harden applies to sudoku checkpoints (one shared positional model)");
        const Dataset ds = load_dataset(h.data, Task::Sudoku);
        if (ds.samples.empty()) throw std::invalid_argument("harden: empty dataset");
        const std::vector<Assignment> sols = training_solutions(ds, h.max_train_solutions);

        HardenOptions opts;
        opts.check_every = h.check_every;
        /* contradiction = some training instance becomes unsolvable; samples
         * are cycled so repeated checks spread over the dataset */
        std::size_t next = 0;
        opts.feasibility_check = [&](const Gm& gm) {
            const Sample& sample = ds.samples[next++ % ds.samples.size()];
            return solve(condition(gm, sample.hints(Task::Sudoku))).feasible;
        };

        const HardenResult res = harden(sudoku_shared_gm(model), sols, opts);
        save_cfn(res.gm, h.out);
        const ReferencePattern ref = sudoku_reference();
        const ConstraintReport rep = constraint_report(res.gm, &ref);
        std::printf("hardened %lld entries (%lld reverted%s)\n",
                    static_cast<long long>(res.hardened), static_cast<long long>(res.reverted),
                    res.stopped_on_contradiction ? ", stopped on contradiction" : "");
        std::printf("%s\n", rep.summary().c_str());
        std::printf("model written to %s\n", h.out.c_str());
    });

    /* ---- export ---- */
    auto* ex = app.add_subcommand("export", "export a checkpoint's cost model for one instance");
    struct {
        std::string checkpoint, data, out;
        int index = 0;
        bool conditioned = false;
        double threshold = 0.0;
    } x;
    ex->add_option("--checkpoint", x.checkpoint, "model checkpoint")->required();
    ex->add_option("--data", x.data, "dataset supplying the instance (jsonl)")->required();
    ex->add_option("--out", x.out, "cost model output (json)")->required();
    ex->add_option("--index", x.index, "instance index in the dataset");
    ex->add_flag("--conditioned", x.conditioned, "pin the instance's observed variables");
    ex->add_option("--threshold", x.threshold, "harden costs >= t to top before export");
    ex->callback([&]() {
        const Model model = load_checkpoint(x.checkpoint, nullptr);
        const Dataset ds = load_dataset(x.data, model.task);
        if (x.index < 0 || x.index >= int(ds.samples.size()))
            throw std::invalid_argument("--index out of range");
        Gm gm = predict_gm(model, ds.samples[std::size_t(x.index)], x.conditioned);
        if (x.threshold > 0) gm = threshold(gm, x.threshold);
        save_cfn(gm, x.out);
        std::printf("cost model written to %s\n", x.out.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return rc;
}
