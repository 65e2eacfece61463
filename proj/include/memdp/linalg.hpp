#ifndef MEMDP_LINALG_HPP
#define MEMDP_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "memdp/errors.hpp"
#include "memdp/rational.hpp"

namespace memdp {

// Sparse absorbing-chain solver. States with a fixed value are absorbing (or
// already solved); the remaining states satisfy x = P x restricted to the
// chain rows. The transient part is condensed into SCCs and solved in reverse
// topological order, so only the strongly-connected blocks ever see dense
// Gaussian elimination. Blocks above `dense_cap` fall back to an iterative
// double-precision solve whose residual is then certified in exact
// arithmetic; results from that path are flagged approximate.
struct ChainSolveResult {
    std::vector<Rat> values;
    bool approximate = false;
};

struct SparseChain {
    // rows[i]: outgoing probabilities of state i; may be empty for absorbing
    // states. Each row that is used must sum to 1.
    std::vector<std::vector<std::pair<int, Rat>>> rows;
    int size() const { return static_cast<int>(rows.size()); }
};

namespace detail {

inline std::vector<std::vector<int>> chain_sccs(const SparseChain& chain,
                                                const std::vector<char>& transient) {
    int n = chain.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;

    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (!transient[root] || index[root] >= 0) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            bool descended = false;
            while (f.edge < chain.rows[f.v].size()) {
                int t = chain.rows[f.v][f.edge].first;
                ++f.edge;
                if (!transient[t]) continue;
                if (index[t] < 0) {
                    index[t] = low[t] = counter++;
                    stack.push_back(t);
                    on_stack[t] = 1;
                    frames.push_back({t, 0});
                    descended = true;
                    break;
                } else if (on_stack[t]) {
                    low[f.v] = std::min(low[f.v], index[t]);
                }
            }
            if (descended) continue;
            int v = f.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<int> comp;
                for (;;) {
                    int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                    if (w == v) break;
                }
                comps.push_back(std::move(comp));
            }
        }
    }
    // Tarjan emits components in reverse topological order: every edge out of
    // a later-emitted component leads into an earlier-emitted one.
    return comps;
}

// Dense exact solve of (I - P) x = b within one SCC.
inline std::vector<Rat> dense_solve(std::vector<std::vector<Rat>> a, std::vector<Rat> b) {
    int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r)
            if (a[r][col] != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) throw SingularSystem();
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        Rat inv = Rat(1) / a[col][col];
        for (int c = col; c < n; ++c) a[col][c] *= inv;
        b[col] *= inv;
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            Rat factor = a[r][col];
            for (int c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    return b;
}

}  // namespace detail

inline ChainSolveResult solve_absorption(const SparseChain& chain,
                                         const std::vector<std::optional<Rat>>& fixed,
                                         std::size_t dense_cap = 10000) {
    int n = chain.size();
    ChainSolveResult res;
    res.values.assign(n, Rat(0));
    std::vector<char> transient(n, 0);
    for (int i = 0; i < n; ++i) {
        if (fixed[i])
            res.values[i] = *fixed[i];
        else
            transient[i] = 1;
    }

    auto comps = detail::chain_sccs(chain, transient);
    // reverse topological order: solve sinks of the condensation first
    for (auto& comp : comps) {
        std::vector<int> local(n, -1);
        int k = static_cast<int>(comp.size());
        for (int i = 0; i < k; ++i) local[comp[i]] = i;

        if (static_cast<std::size_t>(k) <= dense_cap) {
            std::vector<std::vector<Rat>> a(k, std::vector<Rat>(k, Rat(0)));
            std::vector<Rat> b(k, Rat(0));
            for (int i = 0; i < k; ++i) {
                a[i][i] = 1;
                for (const auto& [t, p] : chain.rows[comp[i]]) {
                    if (local[t] >= 0)
                        a[i][local[t]] -= p;
                    else
                        b[i] += p * res.values[t];
                }
            }
            auto x = detail::dense_solve(std::move(a), std::move(b));
            for (int i = 0; i < k; ++i) res.values[comp[i]] = x[i];
        } else {
            // Gauss-Seidel in doubles, then certify the residual exactly.
            std::vector<double> x(k, 0.0);
            std::vector<double> b(k, 0.0);
            for (int i = 0; i < k; ++i)
                for (const auto& [t, p] : chain.rows[comp[i]])
                    if (local[t] < 0) b[i] += to_double(p) * to_double(res.values[t]);
            for (int iter = 0; iter < 100000; ++iter) {
                double delta = 0;
                for (int i = 0; i < k; ++i) {
                    double acc = b[i];
                    double self = 0;
                    for (const auto& [t, p] : chain.rows[comp[i]]) {
                        if (local[t] < 0) continue;
                        if (local[t] == i)
                            self = to_double(p);
                        else
                            acc += to_double(p) * x[local[t]];
                    }
                    double nv = acc / (1.0 - self);
                    delta = std::max(delta, std::fabs(nv - x[i]));
                    x[i] = nv;
                }
                if (delta < 1e-15) break;
            }
            Rat residual = 0;
            for (int i = 0; i < k; ++i) {
                Rat acc = Rat(x[i]);
                for (const auto& [t, p] : chain.rows[comp[i]]) {
                    Rat xv = local[t] >= 0 ? Rat(x[local[t]]) : res.values[t];
                    acc -= p * xv;
                }
                if (acc < 0) acc = -acc;
                if (acc > residual) residual = acc;
            }
            if (residual > Rat(1, 1000000000)) throw SingularSystem();
            for (int i = 0; i < k; ++i) res.values[comp[i]] = Rat(x[i]);
            res.approximate = true;
        }
    }
    return res;
}

}  // namespace memdp

#endif
