#ifndef MEMDP_GRAPH_HPP
#define MEMDP_GRAPH_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "memdp/model.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// EndComponent: state-action pairs closed and strongly connected in every
// environment of its scope.
// ---------------------------------------------------------------------------
struct EndComponent {
    std::map<StateId, std::vector<ActionId>> pairs;
    EnvSet scope;

    std::vector<StateId> states() const {
        std::vector<StateId> r;
        r.reserve(pairs.size());
        for (const auto& [q, _] : pairs) r.push_back(q);
        return r;
    }
    bool contains_state(StateId q) const { return pairs.count(q) > 0; }
    StateId min_state() const { return pairs.begin()->first; }
    bool trivial() const { return pairs.size() == 1; }
};

inline bool ec_is_winning(const EndComponent& ec, const std::vector<int>& priority) {
    int best = -1;
    for (const auto& [q, _] : ec.pairs)
        if (best < 0 || priority[q] < best) best = priority[q];
    return best >= 0 && best % 2 == 0;
}

// ---------------------------------------------------------------------------
// MemorylessStrategy: per-state distribution over actions (Dirac when pure).
// ---------------------------------------------------------------------------
struct MemorylessStrategy {
    std::vector<Dist> choice;  // indexed by state; entries keyed by action id

    bool defined(StateId q) const {
        return q < static_cast<int>(choice.size()) && !choice[q].entries.empty();
    }
    ActionId pure_action(StateId q) const {
        assert(defined(q) && choice[q].entries.size() == 1);
        return choice[q].entries[0].first;
    }
    void set_pure(StateId q, ActionId a) {
        if (q >= static_cast<int>(choice.size())) choice.resize(q + 1);
        choice[q] = Dist::dirac(a);
    }
};

namespace detail {

// View of one environment of a model through state/action masks. All graph
// algorithms run on views so that derived models never need re-indexing.
struct SubView {
    const Memdp* m = nullptr;
    EnvId env = 0;
    std::vector<char> state_in;               // |Q|
    std::vector<std::vector<char>> act_in;    // aligned with enabled lists

    static SubView full(const Memdp& model, EnvId e) {
        SubView v;
        v.m = &model;
        v.env = e;
        v.state_in.assign(model.num_states(), 1);
        v.act_in.resize(model.num_states());
        for (StateId q = 0; q < model.num_states(); ++q)
            v.act_in[q].assign(model.enabled[q].size(), 1);
        return v;
    }

    static SubView over(const Memdp& model, EnvId e, const std::vector<StateId>& states) {
        SubView v = full(model, e);
        v.state_in.assign(model.num_states(), 0);
        for (StateId q : states) v.state_in[q] = 1;
        return v;
    }

    bool has_state(StateId q) const { return state_in[q] != 0; }
    bool has_pair(StateId q, int k) const { return state_in[q] && act_in[q][k]; }

    // Drop actions whose support leaves the view and states left without
    // actions, to a fixpoint.
    void prune_to_closed() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (StateId q = 0; q < m->num_states(); ++q) {
                if (!state_in[q]) continue;
                bool any = false;
                for (std::size_t k = 0; k < m->enabled[q].size(); ++k) {
                    if (!act_in[q][k]) continue;
                    bool ok = true;
                    for (StateId t : m->dist_at(env, q, static_cast<int>(k)).support())
                        if (!state_in[t]) {
                            ok = false;
                            break;
                        }
                    if (!ok) {
                        act_in[q][k] = 0;
                        changed = true;
                    } else {
                        any = true;
                    }
                }
                if (!any) {
                    state_in[q] = 0;
                    changed = true;
                }
            }
        }
    }

    std::vector<StateId> states() const {
        std::vector<StateId> r;
        for (StateId q = 0; q < m->num_states(); ++q)
            if (state_in[q]) r.push_back(q);
        return r;
    }
};

// Iterative Tarjan over the view's transition graph.
inline std::vector<std::vector<StateId>> sccs(const SubView& v) {
    const Memdp& m = *v.m;
    int n = m.num_states();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<StateId> stack;
    std::vector<std::vector<StateId>> out;
    int counter = 0;

    struct Frame {
        StateId q;
        std::size_t k;      // enabled index
        std::size_t t;      // position within dist entries
    };

    auto successors = [&](StateId q, std::size_t k) -> const Dist& {
        return m.dist_at(v.env, q, static_cast<int>(k));
    };

    for (StateId root = 0; root < n; ++root) {
        if (!v.state_in[root] || index[root] >= 0) continue;
        std::vector<Frame> frames;
        frames.push_back({root, 0, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            bool descended = false;
            while (f.k < m.enabled[f.q].size()) {
                if (!v.act_in[f.q][f.k]) {
                    ++f.k;
                    f.t = 0;
                    continue;
                }
                const Dist& d = successors(f.q, f.k);
                if (f.t >= d.entries.size()) {
                    ++f.k;
                    f.t = 0;
                    continue;
                }
                StateId t = d.entries[f.t].first;
                ++f.t;
                if (!v.state_in[t]) continue;
                if (index[t] < 0) {
                    index[t] = low[t] = counter++;
                    stack.push_back(t);
                    on_stack[t] = 1;
                    frames.push_back({t, 0, 0});
                    descended = true;
                    break;
                } else if (on_stack[t]) {
                    low[f.q] = std::min(low[f.q], index[t]);
                }
            }
            if (descended) continue;
            // finished f.q
            StateId q = f.q;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().q] = std::min(low[frames.back().q], low[q]);
            if (low[q] == index[q]) {
                std::vector<StateId> comp;
                for (;;) {
                    StateId w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                    if (w == q) break;
                }
                std::sort(comp.begin(), comp.end());
                out.push_back(std::move(comp));
            }
        }
    }
    return out;
}

// Maximal end-components of a view; each result view is closed and strongly
// connected.
inline std::vector<SubView> mec_views(SubView start) {
    std::vector<SubView> work{std::move(start)};
    std::vector<SubView> out;
    while (!work.empty()) {
        SubView v = std::move(work.back());
        work.pop_back();
        v.prune_to_closed();
        auto comp_states = v.states();
        if (comp_states.empty()) continue;
        auto comps = sccs(v);
        if (comps.size() == 1 && comps[0].size() == comp_states.size()) {
            out.push_back(std::move(v));
            continue;
        }
        for (auto& comp : comps) {
            SubView piece = v;
            piece.state_in.assign(v.m->num_states(), 0);
            for (StateId q : comp) piece.state_in[q] = 1;
            work.push_back(std::move(piece));
        }
    }
    std::sort(out.begin(), out.end(), [](const SubView& a, const SubView& b) {
        return a.states() < b.states();
    });
    return out;
}

inline EndComponent view_to_ec(const SubView& v, EnvSet scope) {
    EndComponent ec;
    ec.scope = scope;
    for (StateId q = 0; q < v.m->num_states(); ++q) {
        if (!v.state_in[q]) continue;
        std::vector<ActionId> acts;
        for (std::size_t k = 0; k < v.m->enabled[q].size(); ++k)
            if (v.act_in[q][k]) acts.push_back(v.m->enabled[q][k]);
        ec.pairs[q] = std::move(acts);
    }
    return ec;
}

inline SubView ec_to_view(const Memdp& m, EnvId e, const EndComponent& ec) {
    SubView v;
    v.m = &m;
    v.env = e;
    v.state_in.assign(m.num_states(), 0);
    v.act_in.resize(m.num_states());
    for (StateId q = 0; q < m.num_states(); ++q) v.act_in[q].assign(m.enabled[q].size(), 0);
    for (const auto& [q, acts] : ec.pairs) {
        v.state_in[q] = 1;
        for (ActionId a : acts) {
            int k = m.enabled_index(q, a);
            if (k >= 0) v.act_in[q][k] = 1;
        }
    }
    return v;
}

// Largest sub-view within `allowed` in which every state keeps a closed
// action; the classical safety (sure-winning) core.
inline SubView safety_core(const Memdp& m, EnvId e, const std::vector<char>& allowed) {
    SubView v = SubView::full(m, e);
    for (StateId q = 0; q < m.num_states(); ++q)
        if (!allowed[q]) v.state_in[q] = 0;
    v.prune_to_closed();
    return v;
}

// Almost-sure reachability (Prob1E): greatest fixpoint of
//   Z -> mu Y. T  u  { q | exists a: Supp(q,a) subset Z and Supp(q,a) meets Y }.
// Also records a memoryless witness choice per state, smallest action id.
struct Prob1Result {
    std::vector<char> in_region;
    std::vector<ActionId> witness;  // -1 where none / inside target
};

inline Prob1Result prob1e_reach(const Memdp& m, EnvId e, const std::vector<char>& target) {
    int n = m.num_states();
    Prob1Result res;
    res.in_region.assign(n, 1);
    res.witness.assign(n, -1);
    for (;;) {
        std::vector<char> y(n, 0);
        std::vector<ActionId> pick(n, -1);
        for (StateId q = 0; q < n; ++q)
            if (target[q]) y[q] = 1;
        bool grown = true;
        while (grown) {
            grown = false;
            for (StateId q = 0; q < n; ++q) {
                if (y[q]) continue;
                for (std::size_t k = 0; k < m.enabled[q].size(); ++k) {
                    const Dist& d = m.dist_at(e, q, static_cast<int>(k));
                    bool stays = true, hits = false;
                    for (StateId t : d.support()) {
                        if (!res.in_region[t]) {
                            stays = false;
                            break;
                        }
                        if (y[t]) hits = true;
                    }
                    if (stays && hits) {
                        y[q] = 1;
                        pick[q] = m.enabled[q][k];
                        grown = true;
                        break;
                    }
                }
            }
        }
        if (y == res.in_region) {
            res.witness = pick;
            return res;
        }
        res.in_region = y;
    }
}

// Pure memoryless choice that reaches `goal` almost-surely inside a closed
// strongly-connected view: every state picks the first action on a shortest
// path (in the view graph) toward the goal set.
inline void attract_inside(const SubView& v, const std::vector<char>& goal,
                           MemorylessStrategy& sigma) {
    const Memdp& m = *v.m;
    int n = m.num_states();
    std::vector<int> dist(n, -1);
    std::vector<StateId> queue;
    for (StateId q = 0; q < n; ++q)
        if (v.state_in[q] && goal[q]) {
            dist[q] = 0;
            queue.push_back(q);
        }
    // reverse BFS over "may move closer" edges
    for (std::size_t head = 0; head < queue.size(); ++head) {
        StateId cur = queue[head];
        for (StateId q = 0; q < n; ++q) {
            if (!v.state_in[q] || dist[q] >= 0) continue;
            for (std::size_t k = 0; k < m.enabled[q].size() && dist[q] < 0; ++k) {
                if (!v.act_in[q][k]) continue;
                if (m.dist_at(v.env, q, static_cast<int>(k)).in_support(cur)) {
                    dist[q] = dist[cur] + 1;
                    sigma.set_pure(q, m.enabled[q][k]);
                    queue.push_back(q);
                }
            }
        }
    }
}

// Winning core of a maximal end-component for parity: the standard recursive
// peeling of the least priority. Returns the states of an even-minimum
// sub-EC if one exists, together with a pure memoryless strategy that wins
// from everywhere in the MEC.
inline std::optional<std::vector<char>> mec_winning_core(const SubView& mec,
                                                         MemorylessStrategy& sigma) {
    const Memdp& m = *mec.m;
    auto states = mec.states();
    if (states.empty()) return std::nullopt;
    int minp = m.priority[states[0]];
    for (StateId q : states) minp = std::min(minp, m.priority[q]);
    if (minp % 2 == 0) {
        // Attract everything in the MEC to a least-priority state; every
        // recurrent class of the induced chain then contains it.
        StateId anchor = -1;
        for (StateId q : states)
            if (m.priority[q] == minp) {
                anchor = q;
                break;
            }
        std::vector<char> goal(m.num_states(), 0);
        goal[anchor] = 1;
        // anchor itself keeps some in-EC action
        for (std::size_t k = 0; k < m.enabled[anchor].size(); ++k)
            if (mec.act_in[anchor][k]) {
                sigma.set_pure(anchor, m.enabled[anchor][k]);
                break;
            }
        attract_inside(mec, goal, sigma);
        std::vector<char> core(m.num_states(), 0);
        for (StateId q : states) core[q] = 1;
        return core;
    }
    // Remove minimal (odd) priority states and recurse on the sub-MECs.
    SubView inner = mec;
    for (StateId q : states)
        if (m.priority[q] == minp) inner.state_in[q] = 0;
    for (auto& sub : mec_views(inner)) {
        MemorylessStrategy inner_sigma;
        auto core = mec_winning_core(sub, inner_sigma);
        if (!core) continue;
        // navigate the rest of the MEC into the winning sub-core
        if (sigma.choice.size() < static_cast<std::size_t>(m.num_states()))
            sigma.choice.resize(m.num_states());
        for (StateId q = 0; q < m.num_states(); ++q)
            if (inner_sigma.defined(q)) sigma.choice[q] = inner_sigma.choice[q];
        attract_inside(mec, *core, sigma);
        return core;
    }
    return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// mec_decomposition: maximal end-components of one environment of the model.
// Output is sorted by minimal state id.
// ---------------------------------------------------------------------------
inline std::vector<EndComponent> mec_decomposition(const Memdp& m, EnvId env = 0) {
    std::vector<EndComponent> out;
    for (const auto& v : detail::mec_views(detail::SubView::full(m, env)))
        out.push_back(detail::view_to_ec(v, EnvSet::single(env)));
    std::sort(out.begin(), out.end(),
              [](const EndComponent& a, const EndComponent& b) { return a.min_state() < b.min_state(); });
    return out;
}

// ---------------------------------------------------------------------------
// almost_sure_mdp: states of value 1 in a single-environment MDP, plus a pure
// memoryless witness strategy winning from all of them. Ties are broken by
// smallest state/action id so outputs are reproducible.
// ---------------------------------------------------------------------------
struct MdpSolution {
    Region region;
    MemorylessStrategy strategy;
    std::vector<char> in_region;  // same content as region.states, as a mask
};

inline MdpSolution almost_sure_mdp(const Memdp& m, const Objective& obj, EnvId env = 0) {
    int n = m.num_states();
    MdpSolution sol;
    sol.strategy.choice.assign(n, Dist{});

    auto finalize = [&](std::vector<char> mask, Objective::Kind kind) {
        std::vector<StateId> states;
        for (StateId q = 0; q < n; ++q)
            if (mask[q]) states.push_back(q);
        sol.in_region = std::move(mask);
        sol.region = Region::of(states, EnvSet::single(env), kind);
        for (StateId q = 0; q < n; ++q)
            if (!sol.strategy.defined(q)) sol.strategy.set_pure(q, m.enabled[q].front());
    };

    if (obj.kind == Objective::Kind::Safe) {
        std::vector<char> allowed(n, 0);
        for (StateId q : obj.states) allowed[q] = 1;
        auto core = detail::safety_core(m, env, allowed);
        for (StateId q = 0; q < n; ++q)
            if (core.state_in[q])
                for (std::size_t k = 0; k < m.enabled[q].size(); ++k)
                    if (core.act_in[q][k]) {
                        sol.strategy.set_pure(q, m.enabled[q][k]);
                        break;
                    }
        finalize(core.state_in, Objective::Kind::Safe);
        return sol;
    }

    std::vector<char> target(n, 0);
    if (obj.kind == Objective::Kind::Reach) {
        for (StateId q : obj.states) target[q] = 1;
    } else {
        // Parity: classify each MEC via its winning core, then reach the
        // union of winning MECs almost-surely.
        for (const auto& mec : detail::mec_views(detail::SubView::full(m, env))) {
            MemorylessStrategy inside;
            auto core = detail::mec_winning_core(mec, inside);
            if (!core) continue;
            for (StateId q : mec.states()) {
                target[q] = 1;
                if (inside.defined(q)) {
                    sol.strategy.choice.resize(std::max(sol.strategy.choice.size(),
                                                        inside.choice.size()));
                    sol.strategy.choice[q] = inside.choice[q];
                }
            }
        }
    }

    auto p1 = detail::prob1e_reach(m, env, target);
    for (StateId q = 0; q < n; ++q) {
        if (!p1.in_region[q]) continue;
        if (!target[q] && p1.witness[q] >= 0 && !sol.strategy.defined(q))
            sol.strategy.set_pure(q, p1.witness[q]);
    }
    finalize(p1.in_region, obj.kind);
    return sol;
}

// Recurrent classes (bottom SCCs) of the chain induced by a memoryless
// strategy on one environment, as state masks.
inline std::vector<std::vector<StateId>> chain_recurrent_classes(const Memdp& m, EnvId env,
                                                                 const MemorylessStrategy& sigma,
                                                                 const std::vector<char>& domain) {
    detail::SubView v;
    v.m = &m;
    v.env = env;
    v.state_in = domain;
    v.act_in.resize(m.num_states());
    for (StateId q = 0; q < m.num_states(); ++q) {
        v.act_in[q].assign(m.enabled[q].size(), 0);
        if (!domain[q] || !sigma.defined(q)) continue;
        for (const auto& [a, p] : sigma.choice[q].entries) {
            int k = m.enabled_index(q, a);
            if (k >= 0) v.act_in[q][k] = 1;
        }
    }
    auto comps = detail::sccs(v);
    std::vector<std::vector<StateId>> bottoms;
    for (auto& comp : comps) {
        bool bottom = true;
        std::vector<char> inside(m.num_states(), 0);
        for (StateId q : comp) inside[q] = 1;
        for (StateId q : comp) {
            for (std::size_t k = 0; k < m.enabled[q].size() && bottom; ++k) {
                if (!v.act_in[q][k]) continue;
                for (StateId t : m.dist_at(env, q, static_cast<int>(k)).support())
                    if (!inside[t]) {
                        bottom = false;
                        break;
                    }
            }
        }
        if (bottom) bottoms.push_back(std::move(comp));
    }
    return bottoms;
}

}  // namespace memdp

#endif
