#ifndef MEMDP_ALMOST_SURE_HPP
#define MEMDP_ALMOST_SURE_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "memdp/graph.hpp"
#include "memdp/model.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// Revealing transitions and the revealed-form transformation.
// ---------------------------------------------------------------------------
struct KnowledgeTransition {
    StateId from = -1;
    ActionId action = -1;
    StateId to = -1;
    EnvSet knowledge;

    friend bool operator<(const KnowledgeTransition& a, const KnowledgeTransition& b) {
        return std::tie(a.from, a.action, a.to) < std::tie(b.from, b.action, b.to);
    }
};

inline std::vector<KnowledgeTransition> revealing_transitions(const Memdp& m, EnvSet K) {
    std::vector<KnowledgeTransition> out;
    for (StateId q = 0; q < m.num_states(); ++q)
        for (ActionId a : m.enabled[q])
            for (StateId t : m.joint_support(K, q, a)) {
                EnvSet know = m.knowledge_after(K, q, a, t);
                if (know.strict_subset_of(K)) out.push_back({q, a, t, know});
            }
    std::sort(out.begin(), out.end());
    return out;
}

struct RevealedModel {
    Memdp model;
    StateId win = -1;
    StateId lose = -1;
    std::vector<std::pair<KnowledgeTransition, bool>> redirects;  // true = win
};

// classify(K_t, q') answers whether q' is winning for the smaller environment
// set K_t; the probability mass of each revealing transition moves onto the
// corresponding sink in the environments where the transition exists.
inline RevealedModel to_revealed_form(const Memdp& m, EnvSet K,
                                      const std::function<bool(EnvSet, StateId)>& classify) {
    SinkedModel sm = ensure_sinks(m);
    RevealedModel r;
    r.win = sm.win;
    r.lose = sm.lose;
    r.model = std::move(sm.model);
    for (const KnowledgeTransition& t : revealing_transitions(m, K)) {
        bool winning = classify(t.knowledge, t.to);
        r.redirects.emplace_back(t, winning);
        StateId sink = winning ? r.win : r.lose;
        for (EnvId e : t.knowledge.members()) {
            int k = r.model.enabled_index(t.from, t.action);
            Dist& d = r.model.delta[e][t.from][k];
            Rat mass = d.prob(t.to);
            d.entries.erase(std::remove_if(d.entries.begin(), d.entries.end(),
                                           [&](const auto& en) { return en.first == t.to; }),
                            d.entries.end());
            d.entries.emplace_back(sink, mass);
            d.normalize_entries();
        }
    }
    return r;
}

namespace detail {

// Almost-sure parity on a single-environment view: MEC winner classification
// plus almost-sure reachability of the union of winning MECs.
struct ViewSolution {
    std::vector<char> region;
    MemorylessStrategy strategy;
};

inline std::vector<char> prob1e_reach_view(const SubView& v, const std::vector<char>& target,
                                           std::vector<ActionId>* witness = nullptr) {
    const Memdp& m = *v.m;
    int n = m.num_states();
    std::vector<char> z = v.state_in;
    std::vector<ActionId> pick(n, -1);
    for (;;) {
        std::vector<char> y(n, 0);
        std::fill(pick.begin(), pick.end(), -1);
        for (StateId q = 0; q < n; ++q)
            if (v.state_in[q] && target[q] && z[q]) y[q] = 1;
        bool grown = true;
        while (grown) {
            grown = false;
            for (StateId q = 0; q < n; ++q) {
                if (!v.state_in[q] || y[q] || !z[q]) continue;
                for (std::size_t k = 0; k < m.enabled[q].size(); ++k) {
                    if (!v.act_in[q][k]) continue;
                    const Dist& d = m.dist_at(v.env, q, static_cast<int>(k));
                    bool stays = true, hits = false;
                    for (StateId t : d.support()) {
                        if (!z[t]) {
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
        if (y == z) break;
        z = y;
    }
    if (witness) *witness = pick;
    return z;
}

inline ViewSolution almost_sure_parity_view(const SubView& base) {
    const Memdp& m = *base.m;
    int n = m.num_states();
    ViewSolution sol;
    sol.strategy.choice.assign(n, Dist{});
    std::vector<char> target(n, 0);
    for (const auto& mec : mec_views(base)) {
        MemorylessStrategy inside;
        auto core = mec_winning_core(mec, inside);
        if (!core) continue;
        for (StateId q : mec.states()) {
            target[q] = 1;
            if (inside.defined(q)) sol.strategy.choice[q] = inside.choice[q];
        }
    }
    std::vector<ActionId> witness;
    sol.region = prob1e_reach_view(base, target, &witness);
    for (StateId q = 0; q < n; ++q) {
        if (!sol.region[q]) continue;
        if (!sol.strategy.defined(q)) {
            if (witness[q] >= 0)
                sol.strategy.set_pure(q, witness[q]);
            else
                sol.strategy.set_pure(q, m.enabled[q].front());
        }
    }
    return sol;
}

inline SubView masked_view(const Memdp& m, EnvId e, const std::vector<char>& state_mask,
                           const std::vector<std::vector<char>>& act_mask) {
    SubView v;
    v.m = &m;
    v.env = e;
    v.state_in = state_mask;
    v.act_in = act_mask;
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// AsSolver: recursive almost-sure analysis with one memoized level per
// canonical environment subset. Environments with identical support families
// are deduplicated before recursing (sound for almost-sure only). The memo is
// lock-protected; duplicate computation is tolerated, results are identical.
// ---------------------------------------------------------------------------
class AsSolver : public std::enable_shared_from_this<AsSolver> {
public:
    struct Level {
        EnvSet canon;
        std::vector<EnvId> envs;
        RevealedModel revealed;
        Memdp union_model;                        // union MDP of the revealed model
        std::vector<char> fix_state;              // Algorithm fixpoint, incl. __q_win
        std::vector<std::vector<char>> fix_act;
        int phase_len = 1;
        std::vector<MemorylessStrategy> sigma;    // per env in `envs`
        std::vector<std::vector<char>> positive_ec;
        Region region;                            // over the input model's states
    };

    static std::shared_ptr<AsSolver> create(Memdp model) {
        return std::shared_ptr<AsSolver>(new AsSolver(std::move(model)));
    }

    const Memdp& model() const { return model_; }

    EnvSet canonical(EnvSet K) const {
        std::vector<EnvId> kept;
        for (EnvId e : K.members()) {
            bool dup = false;
            for (EnvId f : kept)
                if (same_support_family(model_, e, f)) {
                    dup = true;
                    break;
                }
            if (!dup) kept.push_back(e);
        }
        EnvSet r;
        for (EnvId e : kept) r.insert(e);
        return r;
    }

    Region parity_region(EnvSet K) {
        Region r = level(K)->region;
        r.context = K;
        return r;
    }

    std::shared_ptr<const Level> level(EnvSet K) {
        EnvSet canon = canonical(K);
        {
            std::lock_guard<std::mutex> g(mu_);
            auto it = levels_.find(canon.mask());
            if (it != levels_.end()) return it->second;
        }
        auto lv = std::make_shared<Level>(compute_level(canon));
        std::lock_guard<std::mutex> g(mu_);
        auto [it, _] = levels_.emplace(canon.mask(), lv);
        return it->second;
    }

    // Almost-sure safety: revealed-form pre-processing (recursive), then one
    // safety fixpoint on the union MDP.
    Region safety_region(EnvSet K, const std::vector<StateId>& allowed_states) {
        std::map<std::uint64_t, Region> memo;
        return safety_rec(K, allowed_states, memo);
    }

private:
    explicit AsSolver(Memdp model) : model_(std::move(model)) {}

    Level compute_level(EnvSet canon) {
        Level lv;
        lv.canon = canon;
        lv.envs = canon.members();
        lv.revealed = to_revealed_form(model_, canon, [&](EnvSet kt, StateId q) {
            return level(kt)->region.contains(q);
        });
        const Memdp& R = lv.revealed.model;
        lv.union_model = union_mdp(R, canon);

        int n = R.num_states();
        lv.fix_state.assign(n, 1);
        lv.fix_act.resize(n);
        for (StateId q = 0; q < n; ++q) lv.fix_act[q].assign(R.enabled[q].size(), 1);

        for (;;) {
            // P = intersection of the per-environment almost-sure regions
            std::vector<char> p(n, 1);
            for (EnvId e : lv.envs) {
                auto sol = detail::almost_sure_parity_view(
                    detail::masked_view(R, e, lv.fix_state, lv.fix_act));
                for (StateId q = 0; q < n; ++q) p[q] = p[q] && sol.region[q];
            }
            // P' = states that can stay inside P in the union MDP
            detail::SubView uv =
                detail::masked_view(lv.union_model, 0, lv.fix_state, lv.fix_act);
            for (StateId q = 0; q < n; ++q)
                if (!p[q]) uv.state_in[q] = 0;
            uv.prune_to_closed();
            if (uv.state_in == lv.fix_state) break;
            lv.fix_state = uv.state_in;
            lv.fix_act = uv.act_in;
        }

        lv.phase_len = 0;
        for (char c : lv.fix_state) lv.phase_len += c ? 1 : 0;
        lv.phase_len = std::max(lv.phase_len, 1);

        for (EnvId e : lv.envs) {
            auto sol = detail::almost_sure_parity_view(
                detail::masked_view(R, e, lv.fix_state, lv.fix_act));
            lv.sigma.push_back(sol.strategy);
            std::vector<char> pos(n, 0);
            for (const auto& cls :
                 chain_recurrent_classes(R, e, sol.strategy, lv.fix_state))
                for (StateId q : cls) pos[q] = 1;
            lv.positive_ec.push_back(std::move(pos));
        }

        std::vector<StateId> states;
        for (StateId q = 0; q < model_.num_states(); ++q)
            if (lv.fix_state[q]) states.push_back(q);
        lv.region = Region::of(states, canon, Objective::Kind::Parity);
        return lv;
    }

    Region safety_rec(EnvSet K, const std::vector<StateId>& allowed_states,
                      std::map<std::uint64_t, Region>& memo) {
        EnvSet canon = canonical(K);
        auto it = memo.find(canon.mask());
        if (it != memo.end()) return it->second;

        RevealedModel rm = to_revealed_form(model_, canon, [&](EnvSet kt, StateId q) {
            return safety_rec(kt, allowed_states, memo).contains(q);
        });
        Memdp u = union_mdp(rm.model, canon);
        std::vector<char> allowed(u.num_states(), 0);
        for (StateId q : allowed_states)
            if (q < u.num_states()) allowed[q] = 1;
        allowed[rm.win] = 1;
        auto core = detail::safety_core(u, 0, allowed);
        std::vector<StateId> states;
        for (StateId q = 0; q < model_.num_states(); ++q)
            if (core.state_in[q]) states.push_back(q);
        Region r = Region::of(states, K, Objective::Kind::Safe);
        memo.emplace(canon.mask(), r);
        return r;
    }

    Memdp model_;
    std::map<std::uint64_t, std::shared_ptr<const Level>> levels_;
    mutable std::mutex mu_;
};

inline Region as_parity(const Memdp& m, EnvSet K) {
    return AsSolver::create(m)->parity_region(K);
}
inline Region as_parity(const Memdp& m) { return as_parity(m, m.all_envs()); }

inline Region as_safety(const Memdp& m, EnvSet K, const std::vector<StateId>& allowed) {
    return AsSolver::create(m)->safety_region(K, allowed);
}

// ---------------------------------------------------------------------------
// Witness strategy for almost-sure parity. Per knowledge set, the automaton
// rotates through the environments, playing the memoryless strategy of the
// current one for a full phase; after a phase it commits if the current state
// lies in a recurrent class of that strategy's chain, and otherwise rotates.
// Observing a revealing transition enters the block of the smaller knowledge
// set. Memory is interned lazily, bounded by |Q|*|E|*2^|E|.
// ---------------------------------------------------------------------------
class AsStrategyAutomaton final : public StrategyAutomaton {
public:
    AsStrategyAutomaton(std::shared_ptr<AsSolver> solver, EnvSet top,
                        std::size_t memory_cap = 1000000)
        : solver_(std::move(solver)), top_(solver_->canonical(top)), cap_(memory_cap) {}

    int initial_memory(StateId q0) const override {
        auto lv = solver_->level(top_);
        if (!lv->fix_state[q0]) return intern({1, 0, 0, 0, 0});
        return enter_block(top_);
    }

    Dist output(int mem, StateId q) const override {
        Mem s = slots_[mem];
        if (s.dead) return Dist::dirac(solver_->model().enabled[q].front());
        auto lv = solver_->level(EnvSet(s.kmask));
        const MemorylessStrategy& sig = lv->sigma[s.pos];
        if (q < static_cast<int>(sig.choice.size()) && sig.defined(q)) return sig.choice[q];
        return Dist::dirac(solver_->model().enabled[q].front());
    }

    int update(int mem, StateId q, ActionId a, StateId to) const override {
        Mem s = slots_[mem];
        if (s.dead) return mem;
        EnvSet K(s.kmask);
        EnvSet know = solver_->model().knowledge_after(K, q, a, to);
        if (know.strict_subset_of(K)) {
            // An observation that is impossible in every believed environment
            // can occur when this block was entered by a mistaken guess; the
            // run is already charged to the error budget.
            if (know.empty()) return intern({1, 0, 0, 0, 0});
            EnvSet kc = solver_->canonical(know);
            if (solver_->level(kc)->region.contains(to)) return enter_block(kc);
            return intern({1, 0, 0, 0, 0});
        }
        auto lv = solver_->level(K);
        if (s.committed || lv->envs.size() == 1) return mem;
        if (s.cnt + 1 < lv->phase_len) return intern({0, s.kmask, s.pos, s.cnt + 1, 0});
        if (lv->positive_ec[s.pos][to]) return intern({0, s.kmask, s.pos, 0, 1});
        return intern({0, s.kmask, (s.pos + 1) % static_cast<int>(lv->envs.size()), 0, 0});
    }

    std::size_t memory_count() const override { return slots_.size(); }

private:
    struct Mem {
        int dead = 0;
        std::uint64_t kmask = 0;
        int pos = 0;
        int cnt = 0;
        int committed = 0;
    };

    int enter_block(EnvSet kc) const {
        auto lv = solver_->level(kc);
        int committed = lv->envs.size() == 1 ? 1 : 0;
        return intern({0, kc.mask(), 0, 0, committed});
    }

    int intern(Mem s) const {
        auto key = std::make_tuple(s.dead, s.kmask, s.pos, s.cnt, s.committed);
        auto [it, inserted] = ids_.emplace(key, static_cast<int>(slots_.size()));
        if (inserted) {
            slots_.push_back(s);
            if (slots_.size() > cap_) throw MemoryBudgetExceeded(cap_);
        }
        return it->second;
    }

    std::shared_ptr<AsSolver> solver_;
    EnvSet top_;
    std::size_t cap_;
    mutable std::map<std::tuple<int, std::uint64_t, int, int, int>, int> ids_;
    mutable std::vector<Mem> slots_;
};

// W must be contained in the almost-sure region for K; the returned automaton
// wins with probability one from every state of W in every environment of K.
inline std::shared_ptr<StrategyAutomaton> synthesize_as_strategy(
    const std::shared_ptr<AsSolver>& solver, EnvSet K, const Region& w,
    std::size_t memory_cap = 1000000) {
    Region have = solver->parity_region(K);
    for (StateId q : w.states)
        if (!have.contains(q))
            throw std::invalid_argument("requested start states exceed the almost-sure region");
    return std::make_shared<AsStrategyAutomaton>(solver, K, memory_cap);
}

inline std::shared_ptr<StrategyAutomaton> synthesize_as_strategy(const Memdp& m, EnvSet K,
                                                                 const Region& w,
                                                                 std::size_t memory_cap = 1000000) {
    return synthesize_as_strategy(AsSolver::create(m), K, w, memory_cap);
}

}  // namespace memdp

#endif
