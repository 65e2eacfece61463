#ifndef MEMDP_MODEL_HPP
#define MEMDP_MODEL_HPP

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memdp/errors.hpp"
#include "memdp/rational.hpp"

namespace memdp {

using StateId = int;
using ActionId = int;
using EnvId = int;

inline constexpr const char* kWinStateName = "__q_win";
inline constexpr const char* kLoseStateName = "__q_lose";

// ---------------------------------------------------------------------------
// EnvSet: canonical nonempty subset of environments, stored as a bitmask.
// Doubles as the memoization key of the recursive solvers.
// ---------------------------------------------------------------------------
class EnvSet {
public:
    EnvSet() = default;
    explicit EnvSet(std::uint64_t mask) : bits_(mask) {}

    static EnvSet all(int n) {
        return EnvSet(n >= 64 ? ~0ULL : ((1ULL << n) - 1));
    }
    static EnvSet single(EnvId e) { return EnvSet(1ULL << e); }

    bool contains(EnvId e) const { return (bits_ >> e) & 1; }
    void insert(EnvId e) { bits_ |= (1ULL << e); }
    void erase(EnvId e) { bits_ &= ~(1ULL << e); }

    int count() const { return __builtin_popcountll(bits_); }
    bool empty() const { return bits_ == 0; }
    std::uint64_t mask() const { return bits_; }

    EnvSet without(EnvId e) const {
        EnvSet r = *this;
        r.erase(e);
        return r;
    }
    EnvSet intersect(EnvSet o) const { return EnvSet(bits_ & o.bits_); }
    EnvSet unite(EnvSet o) const { return EnvSet(bits_ | o.bits_); }
    bool subset_of(EnvSet o) const { return (bits_ & ~o.bits_) == 0; }
    bool strict_subset_of(EnvSet o) const { return subset_of(o) && bits_ != o.bits_; }

    EnvId min_env() const {
        assert(bits_ != 0);
        return __builtin_ctzll(bits_);
    }

    std::vector<EnvId> members() const {
        std::vector<EnvId> r;
        for (std::uint64_t b = bits_; b; b &= b - 1) r.push_back(__builtin_ctzll(b));
        return r;
    }

    friend bool operator==(EnvSet a, EnvSet b) { return a.bits_ == b.bits_; }
    friend bool operator!=(EnvSet a, EnvSet b) { return a.bits_ != b.bits_; }
    friend bool operator<(EnvSet a, EnvSet b) { return a.bits_ < b.bits_; }

private:
    std::uint64_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Dist: probability distribution with exact rational weights. Entries are
// sorted by id, strictly positive, and sum to one.
// ---------------------------------------------------------------------------
struct Dist {
    std::vector<std::pair<StateId, Rat>> entries;

    static Dist dirac(StateId q) { return Dist{{{q, Rat(1)}}}; }

    static Dist uniform(std::vector<StateId> support) {
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        Dist d;
        Rat w = Rat(1) / Rat(static_cast<long>(support.size()));
        for (StateId q : support) d.entries.emplace_back(q, w);
        return d;
    }

    Rat prob(StateId q) const {
        auto it = std::lower_bound(entries.begin(), entries.end(), q,
                                   [](const auto& e, StateId s) { return e.first < s; });
        if (it != entries.end() && it->first == q) return it->second;
        return Rat(0);
    }

    bool in_support(StateId q) const { return prob(q) != 0; }

    std::vector<StateId> support() const {
        std::vector<StateId> s;
        s.reserve(entries.size());
        for (const auto& [q, _] : entries) s.push_back(q);
        return s;
    }

    Rat total() const {
        Rat t = 0;
        for (const auto& [_, p] : entries) t += p;
        return t;
    }

    void normalize_entries() {
        std::sort(entries.begin(), entries.end());
        std::vector<std::pair<StateId, Rat>> merged;
        for (auto& [q, p] : entries) {
            if (!merged.empty() && merged.back().first == q)
                merged.back().second += p;
            else
                merged.emplace_back(q, p);
        }
        merged.erase(std::remove_if(merged.begin(), merged.end(),
                                    [](const auto& e) { return e.second == 0; }),
                     merged.end());
        entries = std::move(merged);
    }

    friend bool operator==(const Dist& a, const Dist& b) { return a.entries == b.entries; }
    friend bool operator!=(const Dist& a, const Dist& b) { return !(a == b); }
};

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------
struct Objective {
    enum class Kind { Parity, Reach, Safe };
    Kind kind = Kind::Parity;
    std::vector<StateId> states;  // target (Reach) or allowed (Safe), sorted

    static Objective parity() { return {Kind::Parity, {}}; }
    static Objective reach(std::vector<StateId> t) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        return {Kind::Reach, std::move(t)};
    }
    static Objective safe(std::vector<StateId> t) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        return {Kind::Safe, std::move(t)};
    }
};

// ---------------------------------------------------------------------------
// MEMDP. The state and action space is shared by all environments; only the
// transition function differs. delta is indexed [env][state][enabled-index],
// aligned with enabled[state].
// ---------------------------------------------------------------------------
struct Memdp {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::vector<ActionId>> enabled;  // sorted per state, nonempty
    std::vector<std::string> env_names;
    std::vector<std::vector<std::vector<Dist>>> delta;
    std::vector<int> priority;
    StateId initial = 0;

    int num_states() const { return static_cast<int>(state_names.size()); }
    int num_actions() const { return static_cast<int>(action_names.size()); }
    int num_envs() const { return static_cast<int>(env_names.size()); }
    EnvSet all_envs() const { return EnvSet::all(num_envs()); }

    int enabled_index(StateId q, ActionId a) const {
        const auto& acts = enabled[q];
        auto it = std::lower_bound(acts.begin(), acts.end(), a);
        if (it == acts.end() || *it != a) return -1;
        return static_cast<int>(it - acts.begin());
    }

    const Dist& dist(EnvId e, StateId q, ActionId a) const {
        int k = enabled_index(q, a);
        assert(k >= 0);
        return delta[e][q][k];
    }

    const Dist& dist_at(EnvId e, StateId q, int enabled_idx) const {
        return delta[e][q][enabled_idx];
    }

    StateId state_id(const std::string& name) const {
        for (int i = 0; i < num_states(); ++i)
            if (state_names[i] == name) return i;
        return -1;
    }
    ActionId action_id(const std::string& name) const {
        for (int i = 0; i < num_actions(); ++i)
            if (action_names[i] == name) return i;
        return -1;
    }
    EnvId env_id(const std::string& name) const {
        for (int i = 0; i < num_envs(); ++i)
            if (env_names[i] == name) return i;
        return -1;
    }

    // Support of (q,a) across a set of environments.
    std::vector<StateId> joint_support(EnvSet K, StateId q, ActionId a) const {
        std::vector<StateId> s;
        for (EnvId e : K.members())
            for (StateId t : dist(e, q, a).support()) s.push_back(t);
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }

    // Environments of K in which q' is a possible successor of (q,a).
    EnvSet knowledge_after(EnvSet K, StateId q, ActionId a, StateId to) const {
        EnvSet r;
        for (EnvId e : K.members())
            if (dist(e, q, a).in_support(to)) r.insert(e);
        return r;
    }

    bool is_sink(StateId q, std::optional<EnvSet> scope = std::nullopt) const {
        EnvSet K = scope.value_or(all_envs());
        for (EnvId e : K.members())
            for (std::size_t k = 0; k < enabled[q].size(); ++k) {
                const Dist& d = dist_at(e, q, static_cast<int>(k));
                if (d.entries.size() != 1 || d.entries[0].first != q) return false;
            }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Region: a state set tagged with the environment context and objective kind
// it was computed for.
// ---------------------------------------------------------------------------
struct Region {
    std::vector<StateId> states;  // sorted
    EnvSet context;
    Objective::Kind objective = Objective::Kind::Parity;

    bool contains(StateId q) const {
        return std::binary_search(states.begin(), states.end(), q);
    }
    static Region of(std::vector<StateId> s, EnvSet ctx, Objective::Kind k) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return Region{std::move(s), ctx, k};
    }
};

// ---------------------------------------------------------------------------
// Raw (pre-validation) description, with everything still name-based and in
// declaration order.
// ---------------------------------------------------------------------------
struct RawModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::pair<std::string, std::vector<std::string>>> enabled;
    // env -> state -> action -> (state, probability text)
    using RawDist = std::vector<std::pair<std::string, std::string>>;
    using RawStateRow = std::vector<std::pair<std::string, RawDist>>;
    using RawEnvRow = std::vector<std::pair<std::string, RawStateRow>>;
    std::vector<std::pair<std::string, RawEnvRow>> environments;
    std::vector<std::pair<std::string, int>> priority;
    std::string initial;
    bool has_priority = false;
};

// ---------------------------------------------------------------------------
// validate: names are interned to dense ids in declaration order, and all
// type invariants are enforced.
// ---------------------------------------------------------------------------
inline Memdp validate(const RawModel& raw) {
    Memdp m;
    if (raw.states.empty()) throw MalformedModel("model has no states");
    if (raw.environments.empty()) throw MalformedModel("model has no environments");

    std::unordered_map<std::string, StateId> state_id;
    for (const auto& s : raw.states) {
        if (s == kWinStateName || s == kLoseStateName) throw ReservedStateName(s);
        if (!state_id.emplace(s, static_cast<StateId>(m.state_names.size())).second)
            throw MalformedModel("duplicate state name: " + s);
        m.state_names.push_back(s);
    }
    std::unordered_map<std::string, ActionId> action_id;
    for (const auto& a : raw.actions) {
        if (!action_id.emplace(a, static_cast<ActionId>(m.action_names.size())).second)
            throw MalformedModel("duplicate action name: " + a);
        m.action_names.push_back(a);
    }

    auto lookup_state = [&](const std::string& s) -> StateId {
        auto it = state_id.find(s);
        if (it == state_id.end()) throw UnknownState(s);
        return it->second;
    };
    auto lookup_action = [&](const std::string& a) -> ActionId {
        auto it = action_id.find(a);
        if (it == action_id.end()) throw UnknownAction(a);
        return it->second;
    };

    m.enabled.assign(m.state_names.size(), {});
    for (const auto& [sname, acts] : raw.enabled) {
        StateId q = lookup_state(sname);
        for (const auto& aname : acts) m.enabled[q].push_back(lookup_action(aname));
        std::sort(m.enabled[q].begin(), m.enabled[q].end());
        m.enabled[q].erase(std::unique(m.enabled[q].begin(), m.enabled[q].end()),
                           m.enabled[q].end());
    }
    for (StateId q = 0; q < m.num_states(); ++q)
        if (m.enabled[q].empty()) throw EmptyActionSet(m.state_names[q]);

    for (const auto& [ename, _] : raw.environments) m.env_names.push_back(ename);
    {
        auto names = m.env_names;
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw MalformedModel("duplicate environment name");
    }
    if (m.num_envs() > 64) throw MalformedModel("at most 64 environments are supported");

    m.delta.assign(m.num_envs(), {});
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        const auto& [ename, rows] = raw.environments[e];
        m.delta[e].assign(m.num_states(), {});
        std::vector<std::vector<std::optional<Dist>>> table(m.num_states());
        for (StateId q = 0; q < m.num_states(); ++q) table[q].resize(m.enabled[q].size());
        for (const auto& [sname, arow] : rows) {
            StateId q = lookup_state(sname);
            for (const auto& [aname, dist_row] : arow) {
                ActionId a = lookup_action(aname);
                int k = m.enabled_index(q, a);
                if (k < 0)
                    throw MalformedModel("transition for disabled action " + aname +
                                         " at state " + sname);
                Dist d;
                for (const auto& [tname, ptext] : dist_row) {
                    StateId t = lookup_state(tname);
                    auto p = parse_rational(ptext);
                    if (!p) throw MalformedModel("bad probability literal: " + ptext);
                    if (*p < 0) throw NegativeProbability(ename, sname, aname);
                    if (*p == 0) continue;
                    d.entries.emplace_back(t, *p);
                }
                d.normalize_entries();
                if (d.total() != 1) throw DistributionNotNormalized(ename, sname, aname);
                table[q][k] = std::move(d);
            }
        }
        for (StateId q = 0; q < m.num_states(); ++q)
            for (std::size_t k = 0; k < m.enabled[q].size(); ++k) {
                if (!table[q][k])
                    throw MissingTransition(ename, m.state_names[q],
                                            m.action_names[m.enabled[q][k]]);
                m.delta[e][q].push_back(std::move(*table[q][k]));
            }
    }

    m.priority.assign(m.num_states(), 0);
    if (raw.has_priority) {
        for (const auto& [sname, p] : raw.priority) {
            if (p < 0) throw MalformedModel("negative priority for state " + sname);
            m.priority[lookup_state(sname)] = p;
        }
    }

    m.initial = lookup_state(raw.initial);
    return m;
}

// ---------------------------------------------------------------------------
// union_mdp: single-environment MEMDP whose distribution at every enabled
// pair is uniform over the union of the per-environment supports.
// ---------------------------------------------------------------------------
inline Memdp union_mdp(const Memdp& m, EnvSet K) {
    assert(!K.empty());
    Memdp u;
    u.state_names = m.state_names;
    u.action_names = m.action_names;
    u.enabled = m.enabled;
    u.priority = m.priority;
    u.initial = m.initial;
    u.env_names = {"union"};
    u.delta.assign(1, {});
    u.delta[0].assign(m.num_states(), {});
    for (StateId q = 0; q < m.num_states(); ++q)
        for (ActionId a : m.enabled[q])
            u.delta[0][q].push_back(Dist::uniform(m.joint_support(K, q, a)));
    return u;
}

// ---------------------------------------------------------------------------
// restrict_model: sub-MEMDP induced by a state set. Keeps exactly the actions
// whose supports stay inside the set in every environment. Throws NotClosed
// if some kept state ends up with no action.
// ---------------------------------------------------------------------------
inline Memdp restrict_model(const Memdp& m, const std::vector<StateId>& keep_in) {
    std::vector<StateId> keep = keep_in;
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    std::vector<int> new_id(m.num_states(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) new_id[keep[i]] = static_cast<int>(i);

    auto inside = [&](StateId q) { return new_id[q] >= 0; };

    Memdp r;
    r.action_names = m.action_names;
    r.env_names = m.env_names;
    for (StateId q : keep) r.state_names.push_back(m.state_names[q]);
    r.enabled.assign(keep.size(), {});
    r.priority.assign(keep.size(), 0);
    r.delta.assign(m.num_envs(), std::vector<std::vector<Dist>>(keep.size()));

    for (std::size_t i = 0; i < keep.size(); ++i) {
        StateId q = keep[i];
        r.priority[i] = m.priority[q];
        for (ActionId a : m.enabled[q]) {
            bool closed = true;
            for (EnvId e = 0; e < m.num_envs() && closed; ++e)
                for (StateId t : m.dist(e, q, a).support())
                    if (!inside(t)) {
                        closed = false;
                        break;
                    }
            if (!closed) continue;
            r.enabled[i].push_back(a);
            for (EnvId e = 0; e < m.num_envs(); ++e) {
                Dist d = m.dist(e, q, a);
                for (auto& [t, p] : d.entries) t = new_id[t];
                d.normalize_entries();
                r.delta[e][i].push_back(std::move(d));
            }
        }
        if (r.enabled[i].empty()) throw NotClosed(m.state_names[q]);
    }
    r.initial = inside(m.initial) ? new_id[m.initial] : 0;
    return r;
}

// ---------------------------------------------------------------------------
// dedup_environments: keep the first environment (declaration order) per
// distinct support family. Sound for almost-sure analyses only.
// ---------------------------------------------------------------------------
struct DedupResult {
    Memdp model;
    std::vector<EnvId> representative;  // original env -> representative original env
};

inline bool same_support_family(const Memdp& m, EnvId e, EnvId f) {
    for (StateId q = 0; q < m.num_states(); ++q)
        for (std::size_t k = 0; k < m.enabled[q].size(); ++k)
            if (m.dist_at(e, q, static_cast<int>(k)).support() !=
                m.dist_at(f, q, static_cast<int>(k)).support())
                return false;
    return true;
}

inline DedupResult dedup_environments(const Memdp& m) {
    DedupResult r;
    r.representative.assign(m.num_envs(), -1);
    std::vector<EnvId> kept;
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        EnvId rep = -1;
        for (EnvId k : kept)
            if (same_support_family(m, e, k)) {
                rep = k;
                break;
            }
        if (rep < 0) {
            kept.push_back(e);
            rep = e;
        }
        r.representative[e] = rep;
    }
    Memdp out;
    out.state_names = m.state_names;
    out.action_names = m.action_names;
    out.enabled = m.enabled;
    out.priority = m.priority;
    out.initial = m.initial;
    for (EnvId k : kept) {
        out.env_names.push_back(m.env_names[k]);
        out.delta.push_back(m.delta[k]);
    }
    r.model = std::move(out);
    return r;
}

// ---------------------------------------------------------------------------
// encode_objective: reachability and safety as parity with fresh priorities.
// Reach(T): T becomes priority-0 sinks, everything else priority 1.
// Safe(T):  states outside T become priority-1 sinks, T gets priority 0.
// ---------------------------------------------------------------------------
inline Memdp encode_objective(const Memdp& m, const Objective& obj) {
    if (obj.kind == Objective::Kind::Parity) return m;
    Memdp r = m;
    auto in_set = [&](StateId q) {
        return std::binary_search(obj.states.begin(), obj.states.end(), q);
    };
    auto make_sink = [&](StateId q) {
        ActionId a = r.enabled[q].front();
        r.enabled[q] = {a};
        for (EnvId e = 0; e < r.num_envs(); ++e) r.delta[e][q] = {Dist::dirac(q)};
    };
    if (obj.kind == Objective::Kind::Reach) {
        for (StateId q = 0; q < r.num_states(); ++q) {
            if (in_set(q)) {
                make_sink(q);
                r.priority[q] = 0;
            } else {
                r.priority[q] = 1;
            }
        }
    } else {  // Safe
        for (StateId q = 0; q < r.num_states(); ++q) {
            if (in_set(q)) {
                r.priority[q] = 0;
            } else {
                make_sink(q);
                r.priority[q] = 1;
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// ensure_sinks: returns the model extended with __q_win (priority 0) and
// __q_lose (priority 1) absorbing states, reusing matching ones if present.
// ---------------------------------------------------------------------------
struct SinkedModel {
    Memdp model;
    StateId win = -1;
    StateId lose = -1;
};

inline SinkedModel ensure_sinks(const Memdp& m) {
    SinkedModel r;
    r.model = m;
    for (StateId q = 0; q < m.num_states(); ++q) {
        if (m.state_names[q] == kWinStateName) r.win = q;
        if (m.state_names[q] == kLoseStateName) r.lose = q;
    }
    auto add_sink = [&](const std::string& name, int prio) {
        Memdp& mm = r.model;
        StateId q = mm.num_states();
        mm.state_names.push_back(name);
        ActionId a = 0;  // sinks reuse the first action id; the alphabet is unchanged
        mm.enabled.push_back({a});
        mm.priority.push_back(prio);
        for (EnvId e = 0; e < mm.num_envs(); ++e) mm.delta[e].push_back({Dist::dirac(q)});
        return q;
    };
    if (r.win < 0) r.win = add_sink(kWinStateName, 0);
    if (r.lose < 0) r.lose = add_sink(kLoseStateName, 1);
    return r;
}

// Are the distributions of (q,a) identical across all environments in K?
inline bool identical_across(const Memdp& m, EnvSet K, StateId q, ActionId a) {
    auto envs = K.members();
    for (std::size_t i = 1; i < envs.size(); ++i)
        if (m.dist(envs[0], q, a) != m.dist(envs[i], q, a)) return false;
    return true;
}

}  // namespace memdp

#endif
