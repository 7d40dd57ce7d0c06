#include "cfn/dfl.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cfn/rng.hpp"
#include "cfn/tasks.hpp"
#include "doctest.h"

using namespace cfn;

namespace {

Sample triangle() {
    Sample s;
    s.source = 0;
    s.sink = 2;
    s.edges = {{0, 1, 0}, {1, 2, 1}, {0, 2, 2}};
    s.capacities = {5.0, 2.0, 1.0};
    s.solution = {0, 0, 1};
    return s;
}

Sample ball_sample(bool maximize, std::uint64_t seed) {
    CutGenConfig cfg;
    cfg.count = 1;
    cfg.maximize = maximize;
    cfg.seed = seed;
    return gen_cut(cfg).samples[0];
}

}  // namespace

TEST_CASE("paid edges flag exactly the bridges an assignment pays for") {
    const Sample s = triangle();
    const Assignment y = {0, 1, 1};
    CHECK(paid_edges(Task::MinCut, s, y) == std::vector<double>{1.0, 0.0, 1.0});
    CHECK(paid_edges(Task::MaxCut, s, y) == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(paid_edges(Task::MinCut, s, {0, 0, 0}) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(paid_edges(Task::MaxCut, s, {0, 0, 0}) == std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(paid_edges(Task::Sudoku, s, y), std::invalid_argument);
}

TEST_CASE("the cut objective prices exactly the paid bridges") {
    const Sample s = triangle();
    CHECK(cut_objective(Task::MinCut, s, s.capacities, {0, 1, 1}) == 6.0);
    CHECK(cut_objective(Task::MinCut, s, s.capacities, {0, 0, 1}) == 3.0);
    CHECK(cut_objective(Task::MaxCut, s, s.capacities, {0, 1, 1}) == 2.0);
    CHECK_THROWS_AS(cut_objective(Task::MinCut, s, {1.0, 2.0}, {0, 1, 1}),
                    std::invalid_argument);
}

TEST_CASE("regret vanishes at the truth and is scale-invariant") {
    for (const bool maximize : {false, true}) {
        const Task task = maximize ? Task::MaxCut : Task::MinCut;
        const Sample s = ball_sample(maximize, 41);

        CHECK(regret(task, s, s.capacities, s.capacities) == 0.0);

        std::vector<double> doubled = s.capacities;
        for (double& c : doubled) c *= 2.0;
        CHECK(regret(task, s, doubled, s.capacities) == 0.0);  // same argmin, same decision

        std::vector<double> inverted = s.capacities;
        for (double& c : inverted) c = 6.0 - c;  // cheap bridges now look expensive
        const double r = regret(task, s, inverted, s.capacities);
        CHECK(r > 0.0);
        CHECK(std::isfinite(r));
    }

    const Sample s = ball_sample(false, 41);
    std::vector<double> bad = s.capacities;
    bad[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(regret(Task::MinCut, s, bad, s.capacities), std::invalid_argument);
    CHECK_THROWS_AS(regret(Task::MinCut, s, {1.0}, s.capacities), std::invalid_argument);
}

TEST_CASE("the surrogate loss vanishes at the truth and upper-bounds regret") {
    for (const bool maximize : {false, true}) {
        const Task task = maximize ? Task::MaxCut : Task::MinCut;
        const Sample s = ball_sample(maximize, 8);

        CHECK(std::abs(spo_plus_loss(task, s, s.capacities, s.capacities, s.solution)) <= 1e-9);

        Rng rng(15);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> cp(s.capacities.size());
            for (double& c : cp) c = 0.5 + 5.5 * rng.uniform();
            const double upper = spo_plus_loss(task, s, cp, s.capacities, s.solution);
            const double r = regret(task, s, cp, s.capacities);
            CHECK(upper >= r - 1e-9);
        }
    }
}

TEST_CASE("the surrogate subgradient matches finite differences away from ties") {
    const Sample s = ball_sample(false, 8);
    Rng rng(71);
    std::vector<double> cp(s.capacities.size());
    for (double& c : cp) c = 0.5 + 5.5 * rng.uniform();

    const auto g = spo_plus_grad(Task::MinCut, s, cp, s.capacities, s.solution);
    REQUIRE(g.size() == 90);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t e = rng.below(cp.size());
        const double h = 1e-6;
        std::vector<double> up = cp, dn = cp;
        up[e] += h;
        dn[e] -= h;
        const double fd = (spo_plus_loss(Task::MinCut, s, up, s.capacities, s.solution) -
                           spo_plus_loss(Task::MinCut, s, dn, s.capacities, s.solution)) /
                          (2 * h);
        CHECK(std::abs(fd - g[std::size_t(e)]) <= 1e-4);
    }

    // at the truth the degraded objective is minimized by the stored solution
    const auto zero = spo_plus_grad(Task::MinCut, s, s.capacities, s.capacities, s.solution);
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("predicted capacities agree with the predicted cost model") {
    const Sample s = ball_sample(false, 3);
    const Model model = Model::create(Task::MinCut, 19);
    const auto caps = predicted_capacities(model, s);
    REQUIRE(caps.size() == 90);

    const Gm gm = predict_gm(model, s, /*conditioned=*/false);
    for (std::size_t e = 0; e < caps.size(); ++e) {
        CHECK(caps[e] > 0.0);
        CHECK(caps[e] == gm.pairs().at({s.edges[e][0], s.edges[e][1]}).at(0, 1));
    }

    const Model wrong = Model::create(Task::Futoshiki, 19);
    CHECK_THROWS_AS(predicted_capacities(wrong, s), std::invalid_argument);
}

TEST_CASE("one surrogate step moves the parameters and reports the pre-step loss") {
    const Sample s = ball_sample(false, 6);
    Model model = Model::create(Task::MinCut, 12);
    Adam adam(model.net.param_count(), {});
    const std::vector<double> before = model.net.params();

    const double loss = spo_plus_step(model, adam, s);
    CHECK(std::isfinite(loss));
    CHECK(loss >= -1e-9);  // the surrogate dominates regret, which is nonnegative
    CHECK(model.net.params() != before);
    CHECK(adam.t() == 1);
}

TEST_CASE("mean regret averages the per-sample regret of the predicted capacities") {
    CutGenConfig cfg;
    cfg.count = 3;
    cfg.seed = 27;
    const Dataset ds = gen_cut(cfg);
    const Model model = Model::create(Task::MinCut, 9);

    double expect = 0.0;
    for (const Sample& s : ds.samples)
        expect += regret(ds.task, s, predicted_capacities(model, s), s.capacities);
    expect /= double(ds.samples.size());

    const double got = mean_regret(model, ds);
    CHECK(got >= 0.0);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));

    Dataset empty;
    empty.task = Task::MinCut;
    CHECK_THROWS_AS(mean_regret(model, empty), std::invalid_argument);
    Dataset grid;
    grid.task = Task::Sudoku;
    grid.samples.push_back({});
    CHECK_THROWS_AS(mean_regret(model, grid), std::invalid_argument);
}

TEST_CASE("the experiment records regret on a fixed evaluation grid") {
    for (const LossKind loss : {LossKind::Epll, LossKind::SpoPlus}) {
        DflConfig cfg;
        cfg.loss = loss;
        cfg.train_count = 4;  // flip augmentation doubles this
        cfg.test_count = 3;
        cfg.epochs = 2;
        cfg.eval_every = 5;
        cfg.k = 5;
        cfg.seed = 3;

        const DflResult r = run_dfl_experiment(cfg);
        REQUIRE(r.curve.size() >= 2);
        CHECK(r.curve.front().samples_seen == 0);
        CHECK(r.curve.back().samples_seen == 16);
        double aurc = 0.0;
        for (std::size_t p = 1; p < r.curve.size(); ++p) {
            CHECK(r.curve[p - 1].samples_seen < r.curve[p].samples_seen);
            aurc += 0.5 * (r.curve[p - 1].mean_test_regret + r.curve[p].mean_test_regret) *
                    double(r.curve[p].samples_seen - r.curve[p - 1].samples_seen);
        }
        for (const CurvePoint& pt : r.curve) {
            CHECK(pt.mean_test_regret >= 0.0);
            CHECK(std::isfinite(pt.mean_test_regret));
        }
        CHECK(r.aurc == doctest::Approx(aurc).epsilon(1e-12));

        int first = -1;
        for (const CurvePoint& pt : r.curve)
            if (first < 0 && pt.mean_test_regret <= 1e-12) first = pt.samples_seen;
        CHECK(r.first_zero_at == first);
    }

    DflConfig bad;
    bad.loss = LossKind::Npll;
    CHECK_THROWS_AS(run_dfl_experiment(bad), std::invalid_argument);
    bad.loss = LossKind::Epll;
    bad.task = Task::Sudoku;
    CHECK_THROWS_AS(run_dfl_experiment(bad), std::invalid_argument);
}

TEST_CASE("curve rows serialize to a stable comma-separated table") {
    const std::string path = "/tmp/cfn_test_curves.csv";
    write_curves_csv(path, {{0, 0.5, 7, "epll"}, {25, 0.0, 7, "spo+"}});
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "samples_seen,mean_test_regret,seed,loss_name");
    std::getline(in, line);
    CHECK(line == "0,0.5,7,epll");
    std::getline(in, line);
    CHECK(line == "25,0,7,spo+");
    CHECK(!std::getline(in, line));

    CHECK_THROWS_AS(write_curves_csv("/nonexistent-dir/x.csv", {}), std::runtime_error);
}
