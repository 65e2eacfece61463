#ifndef MEMDP_TEST_SUPPORT_HPP
#define MEMDP_TEST_SUPPORT_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "memdp/memdp.hpp"

namespace memdp::testing {

// ---------------------------------------------------------------------------
// Random model generation. Probabilities are drawn from a small palette of
// simple fractions so that cross-environment gaps stay bounded away from
// zero; that keeps sampling plans and exact product chains small.
// ---------------------------------------------------------------------------
struct RandomModelOptions {
    int min_states = 2;
    int max_states = 5;
    int max_actions = 2;
    int envs = 1;
    int max_priority = 3;
    bool acyclic = false;
    bool shared_supports = false;  // all environments get identical supports
};

inline Dist random_dist_on(std::vector<StateId> support, SplitMix64& rng) {
    // weights from {1,2,3,4}, normalized
    Dist d;
    Rat total(0);
    std::vector<Rat> w;
    for (std::size_t i = 0; i < support.size(); ++i) {
        Rat x = rat_of(1 + static_cast<long>(rng.next_below(4)));
        w.push_back(x);
        total += x;
    }
    for (std::size_t i = 0; i < support.size(); ++i) d.entries.emplace_back(support[i], w[i] / total);
    d.normalize_entries();
    return d;
}

inline Memdp random_memdp(std::uint64_t seed, const RandomModelOptions& opt) {
    SplitMix64 rng(seed);
    int n = opt.min_states +
            static_cast<int>(rng.next_below(opt.max_states - opt.min_states + 1));
    Memdp m;
    for (int i = 0; i < n; ++i) m.state_names.push_back("s" + std::to_string(i));
    int num_actions = 1 + static_cast<int>(rng.next_below(opt.max_actions));
    for (int a = 0; a < num_actions; ++a) m.action_names.push_back(std::string(1, 'a' + a));
    for (int e = 0; e < opt.envs; ++e) m.env_names.push_back("e" + std::to_string(e + 1));

    m.enabled.resize(n);
    m.priority.resize(n);
    m.delta.assign(opt.envs, std::vector<std::vector<Dist>>(n));
    for (StateId q = 0; q < n; ++q) {
        m.priority[q] = static_cast<int>(rng.next_below(opt.max_priority + 1));
        int acts = 1 + static_cast<int>(rng.next_below(num_actions));
        for (int a = 0; a < acts; ++a) m.enabled[q].push_back(a);
        for (int k = 0; k < acts; ++k) {
            // choose a support (per environment unless shared)
            std::vector<std::vector<StateId>> supports(opt.envs);
            for (int e = 0; e < opt.envs; ++e) {
                std::vector<StateId> sup;
                if (opt.acyclic && q + 1 < n) {
                    int size = 1 + static_cast<int>(rng.next_below(2));
                    std::set<StateId> chosen;
                    for (int t = 0; t < size; ++t)
                        chosen.insert(q + 1 +
                                      static_cast<int>(rng.next_below(n - q - 1)));
                    sup.assign(chosen.begin(), chosen.end());
                } else if (opt.acyclic) {
                    sup = {q};  // terminal states self-loop
                } else {
                    int size = 1 + static_cast<int>(rng.next_below(2));
                    std::set<StateId> chosen;
                    for (int t = 0; t < size; ++t)
                        chosen.insert(static_cast<StateId>(rng.next_below(n)));
                    sup.assign(chosen.begin(), chosen.end());
                }
                supports[e] = sup;
                if (opt.shared_supports && e == 0)
                    for (int f = 1; f < opt.envs; ++f) supports[f] = sup;
                if (opt.shared_supports) break;
            }
            if (opt.shared_supports)
                for (int e = 1; e < opt.envs; ++e) supports[e] = supports[0];
            for (int e = 0; e < opt.envs; ++e)
                m.delta[e][q].push_back(random_dist_on(supports[e], rng));
        }
    }
    m.initial = 0;
    return m;
}

// Support-preserving perturbation: blends every distribution with the uniform
// one on its own support, with a fresh rational weight per (state, action)
// (the same weight across environments). Supports are untouched, and equal
// distributions stay equal while unequal ones stay unequal.
inline Memdp perturb_preserving_pattern(const Memdp& m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Memdp out = m;
    for (StateId q = 0; q < m.num_states(); ++q)
        for (std::size_t k = 0; k < m.enabled[q].size(); ++k) {
            Rat t = rat_of(1 + static_cast<long>(rng.next_below(6)), 8);  // in (0,1)
            for (EnvId e = 0; e < m.num_envs(); ++e) {
                const Dist& d = m.dist_at(e, q, static_cast<int>(k));
                Dist u = Dist::uniform(d.support());
                Dist blended;
                for (const auto& [s, p] : d.entries)
                    blended.entries.emplace_back(s, (1 - t) * p + t * u.prob(s));
                blended.normalize_entries();
                out.delta[e][q][k] = blended;
            }
        }
    return out;
}

// Support-preserving perturbation with independent weights per environment
// (sound for almost-sure comparisons only).
inline Memdp perturb_preserving_supports(const Memdp& m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Memdp out = m;
    for (StateId q = 0; q < m.num_states(); ++q)
        for (std::size_t k = 0; k < m.enabled[q].size(); ++k)
            for (EnvId e = 0; e < m.num_envs(); ++e) {
                Rat t = rat_of(1 + static_cast<long>(rng.next_below(6)), 8);
                const Dist& d = m.dist_at(e, q, static_cast<int>(k));
                Dist u = Dist::uniform(d.support());
                Dist blended;
                for (const auto& [s, p] : d.entries)
                    blended.entries.emplace_back(s, (1 - t) * p + t * u.prob(s));
                blended.normalize_entries();
                out.delta[e][q][k] = blended;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracles.
// ---------------------------------------------------------------------------

// All pure memoryless strategies of one environment (product of enabled sets).
inline std::vector<std::vector<ActionId>> all_pure_memoryless(const Memdp& m) {
    std::vector<std::vector<ActionId>> out;
    std::vector<std::size_t> idx(m.num_states(), 0);
    for (;;) {
        std::vector<ActionId> s;
        for (StateId q = 0; q < m.num_states(); ++q) s.push_back(m.enabled[q][idx[q]]);
        out.push_back(std::move(s));
        int pos = m.num_states() - 1;
        while (pos >= 0) {
            if (++idx[pos] < m.enabled[pos].size()) break;
            idx[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

// Almost-sure parity region of a single-environment MDP by strategy
// enumeration: a state wins iff some pure memoryless strategy makes every
// reachable recurrent class of its chain even-minimum.
inline std::vector<StateId> brute_force_as_region(const Memdp& m, EnvId e) {
    std::vector<char> winning(m.num_states(), 0);
    for (const auto& choice : all_pure_memoryless(m)) {
        // chain analysis
        SparseChain chain;
        chain.rows.assign(m.num_states(), {});
        for (StateId q = 0; q < m.num_states(); ++q)
            for (const auto& [t, p] : m.dist(e, q, choice[q]).entries)
                chain.rows[q].emplace_back(t, p);
        // recurrent classes and their winners
        std::vector<char> all(m.num_states(), 1);
        auto comps = memdp::detail::chain_sccs(chain, all);
        std::vector<int> cls(m.num_states(), -1);
        std::vector<char> cls_bottom, cls_win;
        for (auto& comp : comps) {
            std::vector<char> inside(m.num_states(), 0);
            for (int v : comp) inside[v] = 1;
            bool bottom = true;
            int minp = -1;
            for (int v : comp) {
                for (const auto& [t, _] : chain.rows[v])
                    if (!inside[t]) bottom = false;
                minp = minp < 0 ? m.priority[v] : std::min(minp, m.priority[v]);
            }
            int id = static_cast<int>(cls_bottom.size());
            for (int v : comp) cls[v] = id;
            cls_bottom.push_back(bottom);
            cls_win.push_back(minp % 2 == 0);
        }
        // q wins under this strategy iff every reachable bottom class is winning
        for (StateId q = 0; q < m.num_states(); ++q) {
            if (winning[q]) continue;
            std::vector<char> seen(m.num_states(), 0);
            std::vector<StateId> stack{q};
            seen[q] = 1;
            bool ok = true;
            while (!stack.empty() && ok) {
                StateId cur = stack.back();
                stack.pop_back();
                if (cls_bottom[cls[cur]] && !cls_win[cls[cur]]) ok = false;
                for (const auto& [t, _] : chain.rows[cur])
                    if (!seen[t]) {
                        seen[t] = 1;
                        stack.push_back(t);
                    }
            }
            if (ok) winning[q] = 1;
        }
    }
    std::vector<StateId> out;
    for (StateId q = 0; q < m.num_states(); ++q)
        if (winning[q]) out.push_back(q);
    return out;
}

// Brute-force maximal end-components by subset enumeration (small models).
inline std::vector<EndComponent> brute_force_mecs(const Memdp& m, EnvId e) {
    int n = m.num_states();
    std::vector<EndComponent> ecs;
    for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
        // candidate states; keep actions closed within the candidate
        EndComponent ec;
        ec.scope = EnvSet::single(e);
        bool ok = true;
        for (StateId q = 0; q < n && ok; ++q) {
            if (!((mask >> q) & 1)) continue;
            std::vector<ActionId> acts;
            for (ActionId a : m.enabled[q]) {
                bool closed = true;
                for (StateId t : m.dist(e, q, a).support())
                    if (!((mask >> t) & 1)) closed = false;
                if (closed) acts.push_back(a);
            }
            if (acts.empty()) ok = false;
            ec.pairs[q] = acts;
        }
        if (!ok) continue;
        // strong connectivity of the candidate graph
        auto view = memdp::detail::ec_to_view(m, e, ec);
        auto comps = memdp::detail::sccs(view);
        if (comps.size() != 1 || comps[0].size() != ec.pairs.size()) continue;
        ecs.push_back(std::move(ec));
    }
    // keep the maximal ones
    std::vector<EndComponent> maximal;
    for (const auto& ec : ecs) {
        bool dominated = false;
        for (const auto& other : ecs) {
            if (&other == &ec) continue;
            bool subset = true;
            for (const auto& [q, acts] : ec.pairs) {
                auto it = other.pairs.find(q);
                if (it == other.pairs.end() ||
                    !std::includes(it->second.begin(), it->second.end(), acts.begin(),
                                   acts.end()))
                    subset = false;
            }
            bool strictly_larger = subset && other.pairs.size() >= ec.pairs.size() &&
                                   !(other.pairs == ec.pairs);
            if (strictly_larger) dominated = true;
        }
        if (!dominated) maximal.push_back(ec);
    }
    std::sort(maximal.begin(), maximal.end(),
              [](const EndComponent& a, const EndComponent& b) {
                  return a.min_state() < b.min_state();
              });
    // dedupe
    maximal.erase(std::unique(maximal.begin(), maximal.end(),
                              [](const EndComponent& a, const EndComponent& b) {
                                  return a.pairs == b.pairs;
                              }),
                  maximal.end());
    return maximal;
}

inline std::vector<StateId> region_states(const Region& r) { return r.states; }

}  // namespace memdp::testing

#endif
