#ifndef MEMDP_EVALUATE_HPP
#define MEMDP_EVALUATE_HPP

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "memdp/linalg.hpp"
#include "memdp/model.hpp"
#include "memdp/rng.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// Product of one environment with a strategy automaton, explored lazily from
// the start node. Node ids are dense; chain rows carry exact probabilities.
// ---------------------------------------------------------------------------
struct ProductChain {
    std::vector<std::pair<StateId, int>> nodes;  // (model state, memory)
    std::map<std::pair<StateId, int>, int> index;
    SparseChain chain;
    std::vector<int> bscc_id;       // -1 for transient nodes
    std::vector<char> bscc_winning; // per bscc
    int start = -1;

    int node_count() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

inline std::vector<std::vector<int>> sccs_of_chain(const SparseChain& chain) {
    std::vector<char> all(chain.size(), 1);
    return chain_sccs(chain, all);
}

}  // namespace detail

inline ProductChain build_product(const Memdp& m, EnvId env, const StrategyAutomaton& sigma,
                                  StateId q0, std::size_t memory_cap = 1000000) {
    ProductChain pc;
    std::map<int, char> memories;
    auto intern = [&](StateId q, int mem) {
        auto [it, inserted] = pc.index.emplace(std::make_pair(q, mem),
                                               static_cast<int>(pc.nodes.size()));
        if (inserted) {
            pc.nodes.emplace_back(q, mem);
            memories.emplace(mem, 1);
            if (memories.size() > memory_cap) throw MemoryBudgetExceeded(memory_cap);
        }
        return it->second;
    };

    int start = intern(q0, sigma.initial_memory(q0));
    pc.start = start;
    for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
        auto [q, mem] = pc.nodes[i];
        Dist out = sigma.output(mem, q);
        std::map<int, Rat> row;
        for (const auto& [a, pa] : out.entries) {
            for (const auto& [t, pt] : m.dist(env, q, a).entries) {
                int nm = sigma.update(mem, q, a, t);
                row[intern(t, nm)] += pa * pt;
            }
        }
        pc.chain.rows.resize(pc.nodes.size());
        auto& r = pc.chain.rows[i];
        for (auto& [j, p] : row) r.emplace_back(j, p);
    }
    pc.chain.rows.resize(pc.nodes.size());

    // classify bottom SCCs by the least model priority among their states
    auto comps = detail::sccs_of_chain(pc.chain);
    pc.bscc_id.assign(pc.nodes.size(), -1);
    for (auto& comp : comps) {
        std::vector<char> inside(pc.nodes.size(), 0);
        for (int v : comp) inside[v] = 1;
        bool bottom = true;
        for (int v : comp)
            for (const auto& [t, _] : pc.chain.rows[v])
                if (!inside[t]) {
                    bottom = false;
                    break;
                }
        if (!bottom) continue;
        int id = static_cast<int>(pc.bscc_winning.size());
        int minp = -1;
        for (int v : comp) {
            pc.bscc_id[v] = id;
            int p = m.priority[pc.nodes[v].first];
            if (minp < 0 || p < minp) minp = p;
        }
        pc.bscc_winning.push_back(minp % 2 == 0);
    }
    return pc;
}

// ---------------------------------------------------------------------------
// evaluate_exact: per-environment probability that the strategy satisfies the
// model's parity objective, by absorption analysis of the product chain.
// ---------------------------------------------------------------------------
struct EvalResult {
    std::vector<EnvId> envs;
    std::vector<Rat> values;        // aligned with envs
    std::vector<int> bscc_counts;   // aligned with envs
    std::vector<int> winning_bscc_counts;
    bool approximate = false;

    Rat value_for(EnvId e) const {
        for (std::size_t i = 0; i < envs.size(); ++i)
            if (envs[i] == e) return values[i];
        return Rat(-1);
    }
    Rat min_value() const {
        Rat m = values.empty() ? Rat(0) : values[0];
        for (const Rat& v : values)
            if (v < m) m = v;
        return m;
    }
};

inline EvalResult evaluate_exact(const Memdp& m, EnvSet K, const StrategyAutomaton& sigma,
                                 StateId q0, std::size_t memory_cap = 1000000,
                                 std::size_t dense_cap = 10000) {
    EvalResult res;
    for (EnvId e : K.members()) {
        ProductChain pc = build_product(m, e, sigma, q0, memory_cap);
        std::vector<std::optional<Rat>> fixed(pc.node_count());
        for (int v = 0; v < pc.node_count(); ++v)
            if (pc.bscc_id[v] >= 0)
                fixed[v] = pc.bscc_winning[pc.bscc_id[v]] ? Rat(1) : Rat(0);
        auto sol = solve_absorption(pc.chain, fixed, dense_cap);
        res.envs.push_back(e);
        res.values.push_back(sol.values[pc.start]);
        res.bscc_counts.push_back(static_cast<int>(pc.bscc_winning.size()));
        int w = 0;
        for (char c : pc.bscc_winning) w += c ? 1 : 0;
        res.winning_bscc_counts.push_back(w);
        res.approximate = res.approximate || sol.approximate;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Seeded Monte-Carlo simulation. A run is classified the moment it enters a
// product-chain BSCC (classification precomputed); runs still undecided at
// the horizon are reported as such. Bit-reproducible for a fixed seed: the
// generator is SplitMix64 with one substream per run index.
// ---------------------------------------------------------------------------
struct SimOutcome {
    long run = 0;
    char outcome = 'u';  // 'w', 'l', 'u'
    long steps = 0;
    StateId final_state = -1;
};

struct SimStats {
    long runs = 0, wins = 0, losses = 0, undecided = 0;
    double win_fraction() const { return runs ? static_cast<double>(wins) / runs : 0.0; }
    double lose_fraction() const { return runs ? static_cast<double>(losses) / runs : 0.0; }
    double undecided_fraction() const {
        return runs ? static_cast<double>(undecided) / runs : 0.0;
    }
};

inline int sample_index(SplitMix64& rng, const std::vector<double>& cumulative) {
    double u = rng.next_unit();
    for (std::size_t i = 0; i < cumulative.size(); ++i)
        if (u < cumulative[i]) return static_cast<int>(i);
    return static_cast<int>(cumulative.size()) - 1;
}

inline SimStats simulate(const Memdp& m, EnvId env, const StrategyAutomaton& sigma, StateId q0,
                         long runs, long horizon, std::uint64_t seed,
                         std::vector<SimOutcome>* trace = nullptr,
                         std::size_t memory_cap = 1000000) {
    ProductChain pc = build_product(m, env, sigma, q0, memory_cap);
    SimStats stats;
    stats.runs = runs;
    for (long r = 0; r < runs; ++r) {
        SplitMix64 rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(r));
        int node = pc.start;
        SimOutcome o{};
        o.run = r;
        for (long step = 0;; ++step) {
            int b = pc.bscc_id[node];
            if (b >= 0) {
                o.outcome = pc.bscc_winning[b] ? 'w' : 'l';
                o.steps = step;
                o.final_state = pc.nodes[node].first;
                break;
            }
            if (step >= horizon) {
                o.outcome = 'u';
                o.steps = step;
                o.final_state = pc.nodes[node].first;
                break;
            }
            const auto& row = pc.chain.rows[node];
            std::vector<double> cum(row.size());
            double acc = 0;
            for (std::size_t i = 0; i < row.size(); ++i) {
                acc += to_double(row[i].second);
                cum[i] = acc;
            }
            node = row[sample_index(rng, cum)].first;
        }
        if (o.outcome == 'w') ++stats.wins;
        else if (o.outcome == 'l') ++stats.losses;
        else ++stats.undecided;
        if (trace) trace->push_back(o);
    }
    return stats;
}

inline void write_trace_csv(std::ostream& os, const Memdp& m,
                            const std::vector<SimOutcome>& outcomes) {
    os << "run,outcome,steps,final_state\n";
    for (const auto& o : outcomes) {
        const char* name = o.outcome == 'w' ? "win" : (o.outcome == 'l' ? "lose" : "undecided");
        os << o.run << "," << name << "," << o.steps << ","
           << (o.final_state >= 0 ? m.state_names[o.final_state] : "") << "\n";
    }
}

}  // namespace memdp

#endif
