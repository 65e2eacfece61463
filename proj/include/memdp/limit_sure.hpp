#ifndef MEMDP_LIMIT_SURE_HPP
#define MEMDP_LIMIT_SURE_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "memdp/almost_sure.hpp"
#include "memdp/graph.hpp"
#include "memdp/model.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// Common end-components of a revealed-form MEMDP are the end-components of
// the union MDP.
// ---------------------------------------------------------------------------
inline bool is_revealed_form(const Memdp& m, EnvSet K) {
    for (const KnowledgeTransition& t : revealing_transitions(m, K))
        if (!m.is_sink(t.to)) return false;
    return true;
}

inline std::vector<EndComponent> common_ecs_revealed(const Memdp& m, EnvSet K) {
    if (!is_revealed_form(m, K))
        throw RevealedFormRequired("model has a revealing transition whose target is not a sink");
    auto mecs = mec_decomposition(union_mdp(m, K), 0);
    for (auto& ec : mecs) ec.scope = K;
    return mecs;
}

// ---------------------------------------------------------------------------
// Distinguishing partitions. The witness is the lexicographically smallest
// (state, action, successor, pivot environment); K1 collects the environments
// that agree with the pivot's probability on the witness transition.
// ---------------------------------------------------------------------------
struct DistinguishingPartition {
    StateId from = -1;
    ActionId action = -1;
    StateId to = -1;
    EnvId pivot_env = -1;
    EnvSet k1, k2;
};

inline std::optional<DistinguishingPartition> find_distinguishing_partition(
    const Memdp& m, EnvSet K, const EndComponent& ec) {
    auto envs = K.members();
    for (const auto& [q, acts] : ec.pairs)
        for (ActionId a : acts)
            for (StateId t : m.joint_support(K, q, a)) {
                bool constant = true;
                for (std::size_t i = 1; i < envs.size() && constant; ++i)
                    if (m.dist(envs[i], q, a).prob(t) != m.dist(envs[0], q, a).prob(t))
                        constant = false;
                if (constant) continue;
                DistinguishingPartition part;
                part.from = q;
                part.action = a;
                part.to = t;
                part.pivot_env = envs[0];
                Rat pivot = m.dist(envs[0], q, a).prob(t);
                for (EnvId e : envs)
                    (m.dist(e, q, a).prob(t) == pivot ? part.k1 : part.k2).insert(e);
                return part;
            }
    return std::nullopt;
}

// Smallest nonzero cross-environment probability difference over the model.
inline std::optional<Rat> min_probability_gap(const Memdp& m, EnvSet K) {
    std::optional<Rat> eta;
    auto envs = K.members();
    for (StateId q = 0; q < m.num_states(); ++q)
        for (ActionId a : m.enabled[q])
            for (StateId t : m.joint_support(K, q, a))
                for (std::size_t i = 0; i < envs.size(); ++i)
                    for (std::size_t j = i + 1; j < envs.size(); ++j) {
                        Rat d = m.dist(envs[i], q, a).prob(t) - m.dist(envs[j], q, a).prob(t);
                        if (d < 0) d = -d;
                        if (d != 0 && (!eta || d < *eta)) eta = d;
                    }
    return eta;
}

inline Rat min_positive_probability(const Memdp& m, EnvSet K) {
    Rat nu(1);
    for (EnvId e : K.members())
        for (StateId q = 0; q < m.num_states(); ++q)
            for (std::size_t k = 0; k < m.enabled[q].size(); ++k)
                for (const auto& [_, p] : m.dist_at(e, q, static_cast<int>(k)).entries)
                    if (p < nu) nu = p;
    return nu;
}

// ---------------------------------------------------------------------------
// LsSolver: recursive limit-sure analysis. One level per raw environment
// subset (support deduplication is not known to be sound for limit-sure, so
// it is not applied on this path). Each level keeps the artifacts needed for
// epsilon-strategy synthesis.
// ---------------------------------------------------------------------------
class LsSolver : public std::enable_shared_from_this<LsSolver> {
public:
    struct CollapsedCec {
        EndComponent ec;
        DistinguishingPartition part;
        Rat pivot_value;
        MemorylessStrategy return_strategy;  // inside the CEC, leads back to part.from
    };

    struct Level {
        EnvSet K;
        std::vector<EnvId> envs;
        RevealedModel revealed;
        Memdp m2;  // revealed model with winning distinguishing MCECs collapsed
        std::vector<int> collapsed_of;  // state -> collapsed index or -1
        std::vector<CollapsedCec> collapsed;
        std::vector<Region> t_sub;                      // per env position
        std::vector<std::vector<char>> a_env;           // per env position
        std::vector<MemorylessStrategy> sigma_t;        // per env position
        std::vector<std::vector<char>> sigma_t_pos_ec;  // per env position
        std::vector<Rat> reach_within_q;  // per env position: min n-step prob into pos EC
        std::vector<char> u_mask;
        std::shared_ptr<AsSolver> reach_as;  // on m2 with Reach(U) encoded
        std::optional<Rat> eta;              // min cross-env gap, scope K
        Rat nu;                              // min positive probability in m2, scope K
        Region region;
    };

    static std::shared_ptr<LsSolver> create(Memdp model) {
        return std::shared_ptr<LsSolver>(new LsSolver(std::move(model)));
    }

    const Memdp& model() const { return model_; }
    const std::shared_ptr<AsSolver>& base_as() { return as_; }

    Region region(EnvSet K) {
        if (K.count() == 1) {
            Region r = as_->parity_region(K);
            r.context = K;
            return r;
        }
        Region r = level(K)->region;
        r.context = K;
        return r;
    }

    std::shared_ptr<const Level> level(EnvSet K) {
        {
            std::lock_guard<std::mutex> g(mu_);
            auto it = levels_.find(K.mask());
            if (it != levels_.end()) return it->second;
        }
        auto lv = std::make_shared<Level>(compute_level(K));
        std::lock_guard<std::mutex> g(mu_);
        auto [it, _] = levels_.emplace(K.mask(), lv);
        return it->second;
    }

private:
    explicit LsSolver(Memdp model)
        : model_(std::move(model)), as_(AsSolver::create(model_)) {}

    Level compute_level(EnvSet K) {
        Level lv;
        lv.K = K;
        lv.envs = K.members();
        lv.revealed = to_revealed_form(model_, K, [&](EnvSet kt, StateId q) {
            return region(kt).contains(q);
        });
        lv.m2 = lv.revealed.model;
        const StateId win = lv.revealed.win;
        int n = lv.m2.num_states();
        lv.collapsed_of.assign(n, -1);

        // Collapse the limit-sure winning distinguishing maximal CECs.
        for (auto& ec : mec_decomposition(union_mdp(lv.m2, K), 0)) {
            ec.scope = K;
            auto part = find_distinguishing_partition(lv.m2, K, ec);
            if (!part) continue;
            bool winning = true;
            for (StateId q : ec.states())
                if (!region(part->k1).contains(q) || !region(part->k2).contains(q)) {
                    winning = false;
                    break;
                }
            if (!winning) continue;
            CollapsedCec cc;
            cc.ec = ec;
            cc.part = *part;
            cc.pivot_value = lv.m2.dist(part->pivot_env, part->from, part->action).prob(part->to);
            // memoryless walk back to the sampled state, within the CEC
            {
                detail::SubView dv = detail::ec_to_view(lv.m2, lv.envs[0], ec);
                std::vector<char> goal(n, 0);
                goal[part->from] = 1;
                cc.return_strategy.choice.assign(n, Dist{});
                detail::attract_inside(dv, goal, cc.return_strategy);
                cc.return_strategy.set_pure(part->from, part->action);
            }
            int idx = static_cast<int>(lv.collapsed.size());
            for (StateId q : ec.states()) lv.collapsed_of[q] = idx;
            lv.collapsed.push_back(std::move(cc));
        }
        // Redirect all transitions entering a collapsed CEC onto __q_win and
        // turn the collapsed states into inert husks.
        if (!lv.collapsed.empty()) {
            for (StateId q = 0; q < n; ++q) {
                if (lv.collapsed_of[q] >= 0) continue;
                for (std::size_t k = 0; k < lv.m2.enabled[q].size(); ++k)
                    for (EnvId e : lv.envs) {
                        Dist& d = lv.m2.delta[e][q][k];
                        bool touched = false;
                        for (auto& [t, p] : d.entries)
                            if (lv.collapsed_of[t] >= 0) {
                                t = win;
                                touched = true;
                            }
                        if (touched) d.normalize_entries();
                    }
            }
            for (StateId q = 0; q < n; ++q) {
                if (lv.collapsed_of[q] < 0) continue;
                ActionId a = lv.m2.enabled[q].front();
                lv.m2.enabled[q] = {a};
                for (EnvId e = 0; e < lv.m2.num_envs(); ++e)
                    lv.m2.delta[e][q] = {Dist::dirac(q)};
                lv.m2.priority[q] = 1;
            }
        }

        // Characterization: T_e = limit-sure region without e; A_e = states of
        // m2[e] that win phi while surely staying inside T_e.
        std::vector<char> husk(n, 0);
        for (StateId q = 0; q < n; ++q) husk[q] = lv.collapsed_of[q] >= 0;
        lv.u_mask.assign(n, 0);
        for (std::size_t i = 0; i < lv.envs.size(); ++i) {
            EnvId e = lv.envs[i];
            lv.t_sub.push_back(region(K.without(e)));
            std::vector<char> allowed(n, 0);
            for (StateId q : lv.t_sub.back().states)
                if (q < n && !husk[q]) allowed[q] = 1;
            allowed[win] = 1;
            auto core = detail::safety_core(lv.m2, e, allowed);
            auto sol = detail::almost_sure_parity_view(core);
            lv.sigma_t.push_back(sol.strategy);
            std::vector<char> pos(n, 0);
            for (const auto& cls : chain_recurrent_classes(lv.m2, e, sol.strategy, sol.region))
                for (StateId q : cls) pos[q] = 1;
            lv.reach_within_q.push_back(min_reach_probability(lv.m2, e, sol, pos));
            lv.sigma_t_pos_ec.push_back(std::move(pos));
            lv.a_env.push_back(sol.region);
            for (StateId q = 0; q < n; ++q)
                if (sol.region[q]) lv.u_mask[q] = 1;
        }

        std::vector<StateId> u_states;
        for (StateId q = 0; q < n; ++q)
            if (lv.u_mask[q]) u_states.push_back(q);
        lv.reach_as = AsSolver::create(encode_objective(lv.m2, Objective::reach(u_states)));
        Region m2_region = lv.reach_as->parity_region(K);

        std::vector<StateId> states;
        for (StateId q = 0; q < model_.num_states(); ++q)
            if (lv.collapsed_of[q] >= 0 || m2_region.contains(q)) states.push_back(q);
        lv.region = Region::of(states, K, Objective::Kind::Parity);

        lv.eta = min_probability_gap(model_, K);
        lv.nu = min_positive_probability(lv.m2, K);
        return lv;
    }

    // Exact minimum, over the strategy's winning states, of the probability of
    // entering a recurrent class of its chain within |Q| steps. This is the
    // quantity that the smallest transition probability to the |Q|-th power
    // lower-bounds; using the exact value keeps the phase length small.
    static Rat min_reach_probability(const Memdp& m, EnvId e, const detail::ViewSolution& sol,
                                     const std::vector<char>& target) {
        int n = m.num_states();
        std::vector<Rat> x(n, Rat(0));
        for (StateId q = 0; q < n; ++q)
            if (sol.region[q] && target[q]) x[q] = 1;
        for (int step = 0; step < n; ++step) {
            std::vector<Rat> nx = x;
            for (StateId q = 0; q < n; ++q) {
                if (!sol.region[q] || target[q] || !sol.strategy.defined(q)) continue;
                Rat acc(0);
                for (const auto& [a, pa] : sol.strategy.choice[q].entries)
                    for (const auto& [t, pt] : m.dist(e, q, a).entries) acc += pa * pt * x[t];
                if (acc > nx[q]) nx[q] = acc;
            }
            x = std::move(nx);
        }
        Rat best(1);
        bool any = false;
        for (StateId q = 0; q < n; ++q)
            if (sol.region[q]) {
                any = true;
                if (x[q] < best) best = x[q];
            }
        return any ? best : Rat(1);
    }

    Memdp model_;
    std::shared_ptr<AsSolver> as_;
    std::map<std::uint64_t, std::shared_ptr<const Level>> levels_;
    mutable std::mutex mu_;
};

inline Region ls_parity(const Memdp& m, EnvSet K) { return LsSolver::create(m)->region(K); }
inline Region ls_parity(const Memdp& m) { return ls_parity(m, m.all_envs()); }

// ---------------------------------------------------------------------------
// SamplingPlan: how an epsilon-strategy learns the block of a distinguishing
// partition. N = ceil(2 ln(1/eps) / eta^2), with the rational upper bound on
// the logarithm; eta is the smallest nonzero cross-environment probability
// difference in scope.
// ---------------------------------------------------------------------------
struct SamplingPlan {
    DistinguishingPartition partition;
    Rat eta;
    Int sample_count;
};

inline Int sampling_count(const Rat& eps, const Rat& eta) {
    return ceil_rat(2 * ln_upper(1 / eps) / (eta * eta));
}

inline SamplingPlan make_sampling_plan(const DistinguishingPartition& part, const Rat& eta,
                                       const Rat& eps) {
    return SamplingPlan{part, eta, sampling_count(eps, eta)};
}

// ---------------------------------------------------------------------------
// The epsilon-strategy automaton. Memory kinds:
//   AS      almost-sure block (value 1; wraps the AS rotation machinery)
//   REACH   play the almost-sure reach strategy toward U in the collapsed model
//   PHASE2  play sigma_t of the chosen environment for a bounded number of steps
//   COMMIT  keep playing sigma_t forever
//   SAMPLE  frequency estimation inside a collapsed distinguishing CEC
//   DEAD    outside every winning region (first enabled action)
// Crossing a revealing transition or entering a collapsed CEC switches blocks;
// every fallible phase gets an equal share eps/(|K|-1) of the error budget.
// ---------------------------------------------------------------------------
class LsStrategyAutomaton final : public StrategyAutomaton {
public:
    LsStrategyAutomaton(std::shared_ptr<LsSolver> solver, EnvSet top, Rat eps,
                        std::size_t memory_cap = 1000000)
        : solver_(std::move(solver)), top_(top), eps_(std::move(eps)), cap_(memory_cap) {
        int fallible = std::max(1, top.count() - 1);
        eps_share_ = eps_ / fallible;
    }

    int initial_memory(StateId q0) const override {
        int mem = dispatch(top_, q0);
        if (slots_[mem].kind == Kind::Dead)
            throw NotLimitSureWinning(solver_->model().state_names[q0]);
        return mem;
    }

    Dist output(int mem, StateId q) const override {
        const Mem& s = slots_[mem];
        const Memdp& m = solver_->model();
        switch (s.kind) {
            case Kind::Dead:
                return Dist::dirac(m.enabled[q].front());
            case Kind::As: {
                auto lv = solver_->base_as()->level(EnvSet(s.kmask));
                const MemorylessStrategy& sig = lv->sigma[s.a];
                if (sig.defined(q)) return sig.choice[q];
                return Dist::dirac(m.enabled[q].front());
            }
            case Kind::Reach: {
                auto lv = solver_->level(EnvSet(s.kmask));
                auto rl = lv->reach_as->level(EnvSet(s.kmask));
                const MemorylessStrategy& sig = rl->sigma[s.a % rl->sigma.size()];
                if (sig.defined(q)) return sig.choice[q];
                return Dist::dirac(m.enabled[q].front());
            }
            case Kind::Phase2:
            case Kind::Commit: {
                auto lv = solver_->level(EnvSet(s.kmask));
                const MemorylessStrategy& sig = lv->sigma_t[s.a];
                if (sig.defined(q)) return sig.choice[q];
                return Dist::dirac(m.enabled[q].front());
            }
            case Kind::Sample: {
                auto lv = solver_->level(EnvSet(s.kmask));
                const MemorylessStrategy& sig = lv->collapsed[s.a].return_strategy;
                if (sig.defined(q)) return sig.choice[q];
                return Dist::dirac(m.enabled[q].front());
            }
        }
        return Dist::dirac(m.enabled[q].front());
    }

    int update(int mem, StateId q, ActionId a, StateId to) const override {
        const Mem s = slots_[mem];
        const Memdp& m = solver_->model();
        if (s.kind == Kind::Dead) return mem;

        EnvSet K(s.kmask);
        if (s.kind == Kind::As) {
            EnvSet know = m.knowledge_after(K, q, a, to);
            auto base = solver_->base_as();
            if (know.strict_subset_of(K)) {
                if (know.empty()) return intern(Mem{Kind::Dead, 0, 0, 0, 0});
                EnvSet kc = base->canonical(know);
                if (base->level(kc)->region.contains(to)) return enter_as(kc);
                return intern(Mem{Kind::Dead, 0, 0, 0, 0});
            }
            auto lv = base->level(K);
            if (s.c || lv->envs.size() == 1) return mem;
            if (s.b + 1 < lv->phase_len) return intern(Mem{Kind::As, s.kmask, s.a, s.b + 1, 0});
            if (lv->positive_ec[s.a][to]) return intern(Mem{Kind::As, s.kmask, s.a, 0, 1});
            return intern(Mem{Kind::As, s.kmask,
                              (s.a + 1) % static_cast<long>(lv->envs.size()), 0, 0});
        }

        auto lv = solver_->level(K);
        if (s.kind == Kind::Sample) {
            const auto& plan = lv->collapsed[s.a];
            long c1 = s.b, c2 = s.c;
            if (q == plan.part.from && a == plan.part.action) {
                ++c1;
                if (to == plan.part.to) ++c2;
                if (c1 >= sample_target(lv)) {
                    // block selection: |c2/N - pivot| < eta/2 chooses K1
                    Rat freq = Rat(c2) / Rat(c1);
                    Rat diff = freq - plan.pivot_value;
                    if (diff < 0) diff = -diff;
                    bool first = diff < *lv->eta / 2;
                    return dispatch(first ? plan.part.k1 : plan.part.k2, to);
                }
            }
            return intern(Mem{Kind::Sample, s.kmask, s.a, c1, c2});
        }

        // REACH / PHASE2 / COMMIT share the interrupt handling.
        EnvSet know = m.knowledge_after(K, q, a, to);
        if (know.strict_subset_of(K)) {
            if (know.empty()) return intern(Mem{Kind::Dead, 0, 0, 0, 0});
            if (solver_->region(know).contains(to)) return dispatch(know, to);
            return intern(Mem{Kind::Dead, 0, 0, 0, 0});
        }
        if (lv->collapsed_of[to] >= 0)
            return intern(Mem{Kind::Sample, s.kmask, lv->collapsed_of[to], 0, 0});

        if (s.kind == Kind::Reach) {
            if (lv->u_mask[to]) return enter_phase2(lv, to);
            auto rl = lv->reach_as->level(K);
            long envs = static_cast<long>(rl->envs.size());
            if (s.b + 1 < rl->phase_len) return intern(Mem{Kind::Reach, s.kmask, s.a, s.b + 1, 0});
            return intern(Mem{Kind::Reach, s.kmask, (s.a + 1) % envs, 0, 0});
        }
        if (s.kind == Kind::Phase2) {
            if (s.b > 1) return intern(Mem{Kind::Phase2, s.kmask, s.a, s.b - 1, 0});
            if (lv->sigma_t_pos_ec[s.a][to]) return intern(Mem{Kind::Commit, s.kmask, s.a, 0, 0});
            return dispatch(K.without(lv->envs[s.a]), to);
        }
        return mem;  // COMMIT
    }

    std::size_t memory_count() const override { return slots_.size(); }

    Rat epsilon_share() const { return eps_share_; }
    Int sampling_count_for(EnvSet K) const {
        auto lv = solver_->level(K);
        return sample_target(lv);
    }

private:
    enum class Kind { As, Reach, Phase2, Commit, Sample, Dead };
    struct Mem {
        Kind kind;
        std::uint64_t kmask;
        long a, b, c;
    };

    int enter_as(EnvSet kc) const {
        auto lv = solver_->base_as()->level(kc);
        int committed = lv->envs.size() == 1 ? 1 : 0;
        return intern(Mem{Kind::As, kc.mask(), 0, 0, committed});
    }

    int enter_phase2(const std::shared_ptr<const LsSolver::Level>& lv, StateId q) const {
        for (std::size_t i = 0; i < lv->envs.size(); ++i)
            if (lv->a_env[i][q]) {
                long steps = phase2_steps(lv, static_cast<int>(i));
                return intern(Mem{Kind::Phase2, lv->K.mask(), static_cast<long>(i), steps, 0});
            }
        return intern(Mem{Kind::Dead, 0, 0, 0, 0});
    }

    long sample_target(const std::shared_ptr<const LsSolver::Level>& lv) const {
        auto it = sample_cache_.find(lv->K.mask());
        if (it != sample_cache_.end()) return it->second;
        if (!lv->eta) throw NoDistinguishingTransition();
        Int n = sampling_count(eps_share_, *lv->eta);
        if (n > Int(static_cast<long>(cap_))) throw MemoryBudgetExceeded(cap_);
        long v = n.get_si();
        sample_cache_[lv->K.mask()] = v;
        return v;
    }

    // Number of sigma_t steps so that the probability of missing its recurrent
    // classes in the matching environment is at most the epsilon share.
    long phase2_steps(const std::shared_ptr<const LsSolver::Level>& lv, int pos) const {
        auto key = std::make_pair(lv->K.mask(), pos);
        auto it = phase2_cache_.find(key);
        if (it != phase2_cache_.end()) return it->second;
        Rat rho = lv->reach_within_q[pos];
        long v = 1;
        if (rho > 0 && rho < 1) {
            Int k = ceil_rat(ln_upper(1 / eps_share_) / rho);
            Int steps = k * lv->m2.num_states();
            if (steps > Int(static_cast<long>(cap_))) throw MemoryBudgetExceeded(cap_);
            v = steps.get_si();
        }
        phase2_cache_[key] = v;
        return v;
    }

    int dispatch(EnvSet K, StateId q) const {
        auto base = solver_->base_as();
        EnvSet kc = base->canonical(K);
        if (K.count() == 1 || base->level(kc)->region.contains(q)) {
            if (base->level(kc)->region.contains(q)) return enter_as(kc);
            return intern(Mem{Kind::Dead, 0, 0, 0, 0});
        }
        auto lv = solver_->level(K);
        if (lv->collapsed_of[q] >= 0)
            return intern(Mem{Kind::Sample, K.mask(), lv->collapsed_of[q], 0, 0});
        if (q < static_cast<int>(lv->u_mask.size()) && lv->u_mask[q]) return enter_phase2(lv, q);
        if (lv->region.contains(q)) return intern(Mem{Kind::Reach, K.mask(), 0, 0, 0});
        return intern(Mem{Kind::Dead, 0, 0, 0, 0});
    }

    int intern(Mem s) const {
        auto key = std::make_tuple(static_cast<int>(s.kind), s.kmask, s.a, s.b, s.c);
        auto [it, inserted] = ids_.emplace(key, static_cast<int>(slots_.size()));
        if (inserted) {
            slots_.push_back(s);
            if (slots_.size() > cap_) throw MemoryBudgetExceeded(cap_);
        }
        return it->second;
    }

    std::shared_ptr<LsSolver> solver_;
    EnvSet top_;
    Rat eps_;
    Rat eps_share_;
    std::size_t cap_;
    mutable std::map<std::tuple<int, std::uint64_t, long, long, long>, int> ids_;
    mutable std::vector<Mem> slots_;
    mutable std::map<std::uint64_t, long> sample_cache_;
    mutable std::map<std::pair<std::uint64_t, int>, long> phase2_cache_;
};

inline std::shared_ptr<StrategyAutomaton> synthesize_ls_strategy(
    const std::shared_ptr<LsSolver>& solver, EnvSet K, const Rat& eps,
    std::size_t memory_cap = 1000000) {
    if (eps <= 0 || eps >= 1) throw std::invalid_argument("eps must lie in (0,1)");
    return std::make_shared<LsStrategyAutomaton>(solver, K, eps, memory_cap);
}

inline std::shared_ptr<StrategyAutomaton> synthesize_ls_strategy(const Memdp& m, EnvSet K,
                                                                 const Rat& eps,
                                                                 std::size_t memory_cap = 1000000) {
    return synthesize_ls_strategy(LsSolver::create(m), K, eps, memory_cap);
}

}  // namespace memdp

#endif
