#include "cfn/gm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cfn {

double Matrix::min() const {
    double m = v.empty() ? 0.0 : v[0];
    for (double x : v) m = std::min(m, x);
    return m;
}

Gm::Gm(std::vector<int> domains, double top)
    : domains_(std::move(domains)), top_(top) {
    if (top_ <= 0) throw std::invalid_argument("gm: top must be positive");
    for (int d : domains_)
        if (d <= 0) throw std::invalid_argument("gm: domain sizes must be positive");
    unary_.resize(domains_.size());
    for (std::size_t i = 0; i < domains_.size(); ++i)
        unary_[i].assign(std::size_t(domains_[i]), 0.0);
    adj_.resize(domains_.size());
}

static void check_var(const Gm& gm, int i) {
    if (i < 0 || i >= gm.n()) throw std::invalid_argument("gm: variable index out of range");
}

void Gm::add_pair(int i, int j, const Matrix& m) {
    check_var(*this, i);
    check_var(*this, j);
    if (i == j) throw std::invalid_argument("gm: pair endpoints must differ");
    if (m.rows != domain(i) || m.cols != domain(j))
        throw std::invalid_argument("gm: pair matrix shape mismatch");
    const int a = std::min(i, j), b = std::max(i, j);
    auto it = pairs_.find({a, b});
    if (it == pairs_.end()) {
        Matrix canon(domain(a), domain(b));
        if (a == i) {
            canon.v = m.v;
        } else {
            for (int r = 0; r < m.rows; ++r)
                for (int c = 0; c < m.cols; ++c) canon.at(c, r) = m.at(r, c);
        }
        auto ins = pairs_.emplace(std::make_pair(a, b), std::move(canon)).first;
        link_adjacency(a, b, &ins->second);
        return;
    }
    Matrix& dst = it->second;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            double& slot = (a == i) ? dst.at(r, c) : dst.at(c, r);
            slot = sat_add(slot, m.at(r, c));
        }
}

void Gm::set_pair(int i, int j, const Matrix& m) {
    check_var(*this, i);
    check_var(*this, j);
    if (i == j) throw std::invalid_argument("gm: pair endpoints must differ");
    if (m.rows != domain(i) || m.cols != domain(j))
        throw std::invalid_argument("gm: pair matrix shape mismatch");
    const int a = std::min(i, j), b = std::max(i, j);
    Matrix canon(domain(a), domain(b));
    if (a == i) {
        canon.v = m.v;
    } else {
        for (int r = 0; r < m.rows; ++r)
            for (int c = 0; c < m.cols; ++c) canon.at(c, r) = m.at(r, c);
    }
    auto it = pairs_.find({a, b});
    if (it == pairs_.end()) {
        auto ins = pairs_.emplace(std::make_pair(a, b), std::move(canon)).first;
        link_adjacency(a, b, &ins->second);
    } else {
        it->second.v = std::move(canon.v);  // shape unchanged; adjacency pointers stay valid
    }
}

bool Gm::has_pair(int i, int j) const {
    return pairs_.count({std::min(i, j), std::max(i, j)}) > 0;
}

double Gm::pair_cost(int i, int j, int a, int b) const {
    const int lo = std::min(i, j), hi = std::max(i, j);
    auto it = pairs_.find({lo, hi});
    if (it == pairs_.end()) return 0.0;
    return (i == lo) ? it->second.at(a, b) : it->second.at(b, a);
}

/* std::map nodes are stable, so Incidence can hold matrix pointers; sorted
 * insertion keeps each list ascending in the other endpoint. */
void Gm::link_adjacency(int lo, int hi, const Matrix* m) {
    auto insert_sorted = [](std::vector<Incidence>& lst, Incidence inc) {
        auto pos = std::lower_bound(lst.begin(), lst.end(), inc.other,
                                    [](const Incidence& x, int o) { return x.other < o; });
        lst.insert(pos, inc);
    };
    insert_sorted(adj_[std::size_t(lo)], {hi, m, false});
    insert_sorted(adj_[std::size_t(hi)], {lo, m, true});
}

void Gm::rebuild_adjacency() {
    for (auto& lst : adj_) lst.clear();
    for (const auto& [key, m] : pairs_) link_adjacency(key.first, key.second, &m);
}

double evaluate(const Gm& gm, const Assignment& y) {
    if (int(y.size()) != gm.n()) throw std::invalid_argument("evaluate: assignment length mismatch");
    const double top = gm.top();
    double total = 0.0;
    bool forbidden = false;
    for (int i = 0; i < gm.n(); ++i) {
        if (y[std::size_t(i)] < 0 || y[std::size_t(i)] >= gm.domain(i))
            throw std::invalid_argument("evaluate: value index out of range");
        const double c = gm.unary(i)[std::size_t(y[std::size_t(i)])];
        if (c >= top) forbidden = true;
        total += c;
    }
    for (const auto& [key, m] : gm.pairs()) {
        const double c = m.at(y[std::size_t(key.first)], y[std::size_t(key.second)]);
        if (c >= top) forbidden = true;
        total += c;
    }
    return forbidden ? top : total;
}

std::vector<double> messages(const Gm& gm, const Assignment& y, int i,
                             const std::vector<int>& mask) {
    check_var(gm, i);
    // the muting lookups below binary-search the mask, so enforce the order
    if (std::adjacent_find(mask.begin(), mask.end(), std::greater_equal<int>()) != mask.end())
        throw std::invalid_argument("messages: mask must be strictly ascending");
    if (std::binary_search(mask.begin(), mask.end(), i))
        throw std::invalid_argument("messages: variable cannot mute itself");
    const int d = gm.domain(i);
    std::vector<double> m(gm.unary(i).begin(), gm.unary(i).end());
    for (const auto& inc : gm.incident(i)) {
        if (std::binary_search(mask.begin(), mask.end(), inc.other)) continue;
        const int yo = y[std::size_t(inc.other)];
        if (yo < 0 || yo >= gm.domain(inc.other))
            throw std::invalid_argument("messages: context value out of range");
        if (!inc.transposed) {
            const double* col = inc.m->v.data() + std::size_t(yo);
            const std::size_t stride = std::size_t(inc.m->cols);
            for (int v = 0; v < d; ++v) m[std::size_t(v)] += col[std::size_t(v) * stride];
        } else {
            const double* row = inc.m->v.data() + std::size_t(yo) * std::size_t(inc.m->cols);
            for (int v = 0; v < d; ++v) m[std::size_t(v)] += row[v];
        }
    }
    return m;
}

std::vector<double> conditional_distribution(const Gm& gm, const Assignment& y,
                                             int i, const std::vector<int>& mask) {
    std::vector<double> m = messages(gm, y, i, mask);
    const double lo = *std::min_element(m.begin(), m.end());
    double z = 0.0;
    for (double& e : m) {
        e = std::exp(-(e - lo));
        z += e;
    }
    for (double& e : m) e /= z;
    return m;
}

Gm condition(const Gm& gm, const Assignment& partial) {
    if (int(partial.size()) != gm.n())
        throw std::invalid_argument("condition: assignment length mismatch");
    Gm out = gm;
    for (int i = 0; i < gm.n(); ++i) {
        const int v = partial[std::size_t(i)];
        if (v == kUnset) continue;
        if (v < 0 || v >= gm.domain(i))
            throw std::invalid_argument("condition: observed value out of range");
        auto& u = out.unary(i);
        std::fill(u.begin(), u.end(), gm.top());
        u[std::size_t(v)] = 0.0;
    }
    return out;
}

std::string export_cfn(const Gm& gm) {
    nlohmann::json doc;
    doc["n"] = gm.n();
    doc["domains"] = gm.domains();
    doc["top"] = gm.top();
    nlohmann::json un = nlohmann::json::array();
    for (int i = 0; i < gm.n(); ++i) un.push_back(gm.unary(i));
    doc["unary"] = std::move(un);
    nlohmann::json pw = nlohmann::json::array();
    for (const auto& [key, m] : gm.pairs()) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < m.rows; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
            rows.push_back(std::move(row));
        }
        pw.push_back({{"i", key.first}, {"j", key.second}, {"costs", std::move(rows)}});
    }
    doc["pairwise"] = std::move(pw);
    return doc.dump();
}

Gm import_cfn(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("cfn: malformed json: ") + e.what());
    }
    try {
        const int n = doc.at("n").get<int>();
        std::vector<int> domains = doc.at("domains").get<std::vector<int>>();
        if (int(domains.size()) != n) throw std::invalid_argument("cfn: domains length != n");
        const double top = doc.value("top", kDefaultTop);
        Gm gm(domains, top);
        const auto& un = doc.at("unary");
        if (!un.is_array() || int(un.size()) != n)
            throw std::invalid_argument("cfn: unary must list one cost vector per variable");
        for (int i = 0; i < n; ++i) {
            std::vector<double> u = un[std::size_t(i)].get<std::vector<double>>();
            if (int(u.size()) != domains[std::size_t(i)])
                throw std::invalid_argument("cfn: unary[" + std::to_string(i) + "] length mismatch");
            gm.unary(i) = std::move(u);
        }
        for (const auto& entry : doc.at("pairwise")) {
            const int i = entry.at("i").get<int>();
            const int j = entry.at("j").get<int>();
            if (i >= j)
                throw std::invalid_argument("cfn: pairwise keys must satisfy i < j");
            if (i < 0 || j >= n)
                throw std::invalid_argument("cfn: pairwise variable index out of range");
            if (gm.has_pair(i, j))
                throw std::invalid_argument("cfn: duplicate pairwise entry");
            const auto& rows = entry.at("costs");
            Matrix m(domains[std::size_t(i)], domains[std::size_t(j)]);
            if (int(rows.size()) != m.rows)
                throw std::invalid_argument("cfn: pairwise (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") row count mismatch");
            for (int r = 0; r < m.rows; ++r) {
                const auto& row = rows[std::size_t(r)];
                if (int(row.size()) != m.cols)
                    throw std::invalid_argument("cfn: pairwise (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") column count mismatch");
                for (int c = 0; c < m.cols; ++c) m.at(r, c) = row[std::size_t(c)].get<double>();
            }
            gm.set_pair(i, j, m);
        }
        return gm;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("cfn: schema error: ") + e.what());
    }
}

void save_cfn(const Gm& gm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cfn: cannot open for writing: " + path);
    out << export_cfn(gm) << '\n';
}

Gm load_cfn(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cfn: cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return import_cfn(ss.str());
}

}  // namespace cfn
