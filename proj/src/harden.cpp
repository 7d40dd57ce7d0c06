#include "cfn/harden.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace cfn {

Gm threshold(const Gm& gm, double t) {
    if (t <= 0.0) throw std::invalid_argument("threshold: t must be positive");
    if (t > gm.top()) throw std::invalid_argument("threshold: t must not exceed top");
    Gm out = gm;
    for (auto& [key, m] : out.pairs()) {
        (void)key;
        for (double& c : m.v) c = (c < t) ? 0.0 : gm.top();
    }
    return out;
}

namespace {

struct Candidate {
    double cost;
    int i, j, a, b;
};

}  // namespace

HardenResult harden(const Gm& gm, const std::vector<Assignment>& training_solutions,
                    const HardenOptions& options) {
    if (training_solutions.empty())
        throw std::invalid_argument("harden: at least one training solution is required");
    for (const auto& y : training_solutions)
        if (int(y.size()) != gm.n())
            throw std::invalid_argument("harden: training solution length mismatch");

    // value pairs observed in the training data, per declared pair
    std::map<std::pair<int, int>, std::vector<char>> used;
    for (const auto& [key, m] : gm.pairs())
        used.emplace(key, std::vector<char>(m.v.size(), 0));
    for (const auto& y : training_solutions)
        for (auto& [key, flags] : used) {
            const Matrix& m = gm.pairs().at(key);
            flags[std::size_t(y[std::size_t(key.first)]) * std::size_t(m.cols) +
                  std::size_t(y[std::size_t(key.second)])] = 1;
        }

    std::vector<Candidate> cands;
    for (const auto& [key, m] : gm.pairs())
        for (int a = 0; a < m.rows; ++a)
            for (int b = 0; b < m.cols; ++b) {
                const double c = m.at(a, b);
                if (c > 0.0 && c < gm.top() &&
                    !used.at(key)[std::size_t(a) * std::size_t(m.cols) + std::size_t(b)])
                    cands.push_back({c, key.first, key.second, a, b});
            }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.cost != y.cost) return x.cost > y.cost;
        return std::tie(x.i, x.j, x.a, x.b) < std::tie(y.i, y.j, y.a, y.b);
    });

    HardenResult result;
    result.gm = gm;
    std::vector<double> previous(cands.size(), 0.0);  // overwritten cost per candidate
    std::size_t applied = 0;                           // first `applied` candidates are at top

    auto set_applied = [&](std::size_t target) {
        while (applied > target) {
            --applied;
            const Candidate& c = cands[applied];
            result.gm.pairs().at({c.i, c.j}).at(c.a, c.b) = previous[applied];
        }
        while (applied < target) {
            const Candidate& c = cands[applied];
            Matrix& m = result.gm.pairs().at({c.i, c.j});
            previous[applied] = m.at(c.a, c.b);
            m.at(c.a, c.b) = result.gm.top();
            ++applied;
        }
    };

    const std::size_t batch = options.check_every > 0 ? std::size_t(options.check_every) : 100;
    std::size_t known_good = 0;  // prefix length verified feasible
    while (applied < cands.size()) {
        set_applied(std::min(cands.size(), applied + batch));
        if (options.feasibility_check && !options.feasibility_check(result.gm)) {
            /* Contradiction inside this batch: bisect for the smallest
             * failing prefix, keep everything before the offending
             * hardening, and stop ("repeat until a contradiction"). */
            const std::size_t at_failure = applied;
            std::size_t lo = known_good, hi = applied;
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                set_applied(mid);
                if (options.feasibility_check(result.gm))
                    lo = mid;
                else
                    hi = mid;
            }
            set_applied(hi - 1);
            result.reverted = std::int64_t(at_failure - (hi - 1));
            result.stopped_on_contradiction = true;
            break;
        }
        known_good = applied;
    }
    result.hardened = std::int64_t(applied);
    return result;
}

ConstraintReport constraint_report(const Gm& gm, const ReferencePattern* reference) {
    ConstraintReport rep;
    std::map<std::pair<int, int>, std::set<std::pair<int, int>>> predicted;
    for (const auto& [key, m] : gm.pairs()) {
        std::set<std::pair<int, int>> tuples;
        for (int a = 0; a < m.rows; ++a)
            for (int b = 0; b < m.cols; ++b)
                if (m.at(a, b) >= gm.top()) tuples.insert({a, b});
        rep.forbidden_tuples += std::int64_t(tuples.size());
        if (!tuples.empty()) {
            ++rep.pairs_with_constraints;
            predicted.emplace(key, std::move(tuples));
        }
    }
    if (reference) {
        for (const auto& [key, expect] : reference->forbidden) {
            auto it = predicted.find(key);
            const auto& got = it == predicted.end() ? std::set<std::pair<int, int>>{} : it->second;
            std::int64_t missing = 0, extra = 0;
            for (const auto& t : expect)
                if (!got.count(t)) ++missing;
            for (const auto& t : got)
                if (!expect.count(t)) ++extra;
            if (missing == 0 && extra == 0)
                ++rep.exact_pairs;
            else if (missing > 0)
                ++rep.missed_pairs;
            if (extra > 0) ++rep.false_pairs;
            rep.missed_tuples += missing;
            rep.false_tuples += extra;
        }
        for (const auto& [key, got] : predicted)
            if (!reference->forbidden.count(key)) {
                ++rep.false_pairs;
                rep.false_tuples += std::int64_t(got.size());
            }
    }
    return rep;
}

std::string ConstraintReport::summary() const {
    std::ostringstream os;
    os << "forbidden tuples: " << forbidden_tuples
       << ", pairs with constraints: " << pairs_with_constraints;
    os << "\nvs reference: exact pairs " << exact_pairs << ", missed pairs " << missed_pairs
       << ", false pairs " << false_pairs << " (missed tuples " << missed_tuples
       << ", false tuples " << false_tuples << ")";
    return os.str();
}

}  // namespace cfn
