#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cfn {

/* A complete assignment is a value index per variable; a partial assignment
 * uses kUnset for unobserved variables. */
using Assignment = std::vector<int>;
inline constexpr int kUnset = -1;

inline constexpr double kDefaultTop = 1e6;

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(std::size_t(r) * std::size_t(c), fill) {}

    double& at(int r, int c) { return v[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    double at(int r, int c) const { return v[std::size_t(r) * std::size_t(cols) + std::size_t(c)]; }
    double min() const;
};

/* Pairwise graphical model over discrete variables: per-variable unary cost
 * vectors plus a sparse set of pairwise cost matrices.  Matrices are stored
 * once per unordered pair under the canonical key i<j; reads through the
 * (j,i) orientation see the transpose, so both views stay coherent by
 * construction.  Any cost equal to `top` marks a hard-forbidden tuple and
 * cost sums saturate at `top`. */
class Gm {
public:
    Gm() = default;
    Gm(std::vector<int> domains, double top = kDefaultTop);

    // adjacency holds pointers into pairs_, so copies must relink
    Gm(const Gm& other)
        : domains_(other.domains_), top_(other.top_), unary_(other.unary_),
          pairs_(other.pairs_) {
        adj_.resize(domains_.size());
        rebuild_adjacency();
    }
    Gm& operator=(const Gm& other) {
        if (this != &other) {
            domains_ = other.domains_;
            top_ = other.top_;
            unary_ = other.unary_;
            pairs_ = other.pairs_;
            adj_.assign(domains_.size(), {});
            rebuild_adjacency();
        }
        return *this;
    }
    Gm(Gm&&) = default;  // map nodes are stable under move
    Gm& operator=(Gm&&) = default;

    int n() const { return int(domains_.size()); }
    int domain(int i) const { return domains_[std::size_t(i)]; }
    const std::vector<int>& domains() const { return domains_; }
    double top() const { return top_; }

    std::vector<double>& unary(int i) { return unary_[std::size_t(i)]; }
    const std::vector<double>& unary(int i) const { return unary_[std::size_t(i)]; }

    /* Adds `m` (shape |D_i| x |D_j|, any i != j) into the pair's matrix,
     * saturating entrywise at top; creates the pair if absent.  Summing
     * matches the semantics of posting several cost functions on one scope. */
    void add_pair(int i, int j, const Matrix& m);
    void set_pair(int i, int j, const Matrix& m);  // overwrite (canonical orientation applied)
    bool has_pair(int i, int j) const;
    /* Cost of (value a of var i, value b of var j); 0 for undeclared pairs. */
    double pair_cost(int i, int j, int a, int b) const;

    const std::map<std::pair<int, int>, Matrix>& pairs() const { return pairs_; }
    std::map<std::pair<int, int>, Matrix>& pairs() { return pairs_; }

    struct Incidence {
        int other;
        const Matrix* m;
        bool transposed;  // true when this variable indexes columns of *m
        double cost(int a, int b) const {  // a: this var's value, b: other's
            return transposed ? m->at(b, a) : m->at(a, b);
        }
    };
    /* Pairs incident to variable i, ascending in the other endpoint. */
    const std::vector<Incidence>& incident(int i) const { return adj_[std::size_t(i)]; }
    int degree(int i) const { return int(adj_[std::size_t(i)].size()); }

    // min(a + b, top); any operand at or above top yields top
    double sat_add(double a, double b) const {
        if (a >= top_ || b >= top_) return top_;
        const double s = a + b;
        return s >= top_ ? top_ : s;
    }

private:
    void rebuild_adjacency();
    void link_adjacency(int lo, int hi, const Matrix* m);

    std::vector<int> domains_;
    double top_ = kDefaultTop;
    std::vector<std::vector<double>> unary_;
    std::map<std::pair<int, int>, Matrix> pairs_;
    std::vector<std::vector<Incidence>> adj_;
};

/* Total cost of a complete assignment: sum of all unary and declared pairwise
 * costs, saturating at top as soon as any term is a hard-forbidden tuple. */
double evaluate(const Gm& gm, const Assignment& y);

/* Message vector m_i(v) = unary[i](v) + sum over incident pairs {i,j} with
 * j not masked of M[i,j](v, y[j]).  `mask` lists muted context variables in
 * ascending order; y[i] itself is never read. */
std::vector<double> messages(const Gm& gm, const Assignment& y, int i,
                             const std::vector<int>& mask = {});

/* P(Y_i = v | y_{-i}) on the (possibly masked) model: softmax of -m_i with
 * max subtraction, so entries are finite and sum to 1 even when messages
 * contain top. */
std::vector<double> conditional_distribution(const Gm& gm, const Assignment& y,
                                             int i, const std::vector<int>& mask = {});

/* Copy of gm with every observed variable's unary replaced by 0 at its
 * observed value and top elsewhere.  Pairwise costs are untouched. */
Gm condition(const Gm& gm, const Assignment& partial);

// JSON (de)serialization; import validates shapes and canonical i<j keys.
std::string export_cfn(const Gm& gm);
Gm import_cfn(const std::string& json_text);
void save_cfn(const Gm& gm, const std::string& path);
Gm load_cfn(const std::string& path);

}  // namespace cfn
