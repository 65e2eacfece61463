#ifndef MEMDP_QUANTITATIVE_HPP
#define MEMDP_QUANTITATIVE_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "memdp/evaluate.hpp"
#include "memdp/limit_sure.hpp"
#include "memdp/model.hpp"
#include "memdp/rng.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// Maximal common end-components of a general MEMDP (no revealed form
// assumed). Candidates are refined by per-environment MEC decomposition until
// every piece is a single MEC of itself in each environment of the scope.
// ---------------------------------------------------------------------------
inline std::vector<EndComponent> mcecs_general(const Memdp& m, EnvSet K) {
    using Masks = std::pair<std::vector<char>, std::vector<std::vector<char>>>;
    std::vector<Masks> work;
    {
        std::vector<char> s(m.num_states(), 1);
        std::vector<std::vector<char>> a(m.num_states());
        for (StateId q = 0; q < m.num_states(); ++q) a[q].assign(m.enabled[q].size(), 1);
        work.emplace_back(std::move(s), std::move(a));
    }
    std::vector<EndComponent> out;
    auto envs = K.members();
    while (!work.empty()) {
        Masks cand = std::move(work.back());
        work.pop_back();
        bool stable = true;
        for (EnvId e : envs) {
            detail::SubView v;
            v.m = &m;
            v.env = e;
            v.state_in = cand.first;
            v.act_in = cand.second;
            auto pieces = detail::mec_views(v);
            bool unchanged = pieces.size() == 1 && pieces[0].state_in == cand.first &&
                             pieces[0].act_in == cand.second;
            if (!unchanged) {
                for (auto& p : pieces) work.emplace_back(p.state_in, p.act_in);
                stable = false;
                break;
            }
        }
        if (!stable) continue;
        bool empty = std::all_of(cand.first.begin(), cand.first.end(),
                                 [](char c) { return !c; });
        if (empty) continue;
        detail::SubView v;
        v.m = &m;
        v.env = envs[0];
        v.state_in = cand.first;
        v.act_in = cand.second;
        out.push_back(detail::view_to_ec(v, K));
    }
    std::sort(out.begin(), out.end(), [](const EndComponent& a, const EndComponent& b) {
        return a.min_state() < b.min_state();
    });
    return out;
}

// ---------------------------------------------------------------------------
// MCEC classification. A common end-component is distinguishing when some of
// its state-action pairs has different distributions in two environments of
// the scope (support or probability). Non-distinguishing ones are winning
// when a strategy can satisfy the parity objective with probability one from
// inside, i.e. when they contain a sub-component of even least priority.
// ---------------------------------------------------------------------------
enum class McecClass { Distinguishing, NondistinguishingWinning, NondistinguishingLosing, Trivial };

inline bool mcec_is_distinguishing(const Memdp& m, const EndComponent& ec) {
    for (const auto& [q, acts] : ec.pairs)
        for (ActionId a : acts)
            if (!identical_across(m, ec.scope, q, a)) return true;
    return false;
}

inline bool ec_parity_winning(const Memdp& m, const EndComponent& ec) {
    detail::SubView v = detail::ec_to_view(m, ec.scope.min_env(), ec);
    MemorylessStrategy unused;
    return detail::mec_winning_core(v, unused).has_value();
}

inline McecClass classify_mcec(const Memdp& m, const EndComponent& ec) {
    if (ec.trivial()) return McecClass::Trivial;
    if (mcec_is_distinguishing(m, ec)) return McecClass::Distinguishing;
    return ec_parity_winning(m, ec) ? McecClass::NondistinguishingWinning
                                    : McecClass::NondistinguishingLosing;
}

// ---------------------------------------------------------------------------
// purge: collapse every non-distinguishing MCEC D into a fresh state s_D with
// a `stay` action leading to __q_win or __q_lose depending on the winner, and
// one frontier action per state-action pair of D that can leave it, carrying
// the f-aggregated image probabilities.
// ---------------------------------------------------------------------------
struct PurgeResult {
    Memdp model;
    std::vector<StateId> state_map;                      // original -> purged
    std::vector<std::pair<EndComponent, bool>> collapsed;
    StateId win = -1;
    StateId lose = -1;
};

inline PurgeResult purge(const Memdp& m, EnvSet K) {
    PurgeResult res;
    auto mcecs = mcecs_general(m, K);
    std::vector<int> cec_of(m.num_states(), -1);
    std::vector<bool> cec_winning;
    std::vector<const EndComponent*> cecs;
    for (const auto& ec : mcecs) {
        McecClass cls = classify_mcec(m, ec);
        bool winning;
        if (cls == McecClass::Distinguishing) continue;
        winning = cls == McecClass::NondistinguishingWinning ||
                  (cls == McecClass::Trivial && ec_parity_winning(m, ec));
        int idx = static_cast<int>(cecs.size());
        for (StateId q : ec.states()) cec_of[q] = idx;
        cecs.push_back(&ec);
        cec_winning.push_back(winning);
        res.collapsed.emplace_back(ec, winning);
    }

    Memdp& out = res.model;
    out.env_names = m.env_names;
    out.action_names = m.action_names;
    ActionId stay = out.num_actions();
    out.action_names.push_back("stay");

    res.state_map.assign(m.num_states(), -1);
    for (StateId q = 0; q < m.num_states(); ++q)
        if (cec_of[q] < 0) {
            res.state_map[q] = static_cast<StateId>(out.state_names.size());
            out.state_names.push_back(m.state_names[q]);
        }
    std::vector<StateId> cec_state(cecs.size());
    for (std::size_t i = 0; i < cecs.size(); ++i) {
        cec_state[i] = static_cast<StateId>(out.state_names.size());
        out.state_names.push_back("__cec_" + m.state_names[cecs[i]->min_state()]);
        for (StateId q : cecs[i]->states()) res.state_map[q] = cec_state[i];
    }
    res.win = static_cast<StateId>(out.state_names.size());
    out.state_names.push_back(kWinStateName);
    res.lose = static_cast<StateId>(out.state_names.size());
    out.state_names.push_back(kLoseStateName);

    int n_out = out.num_states();
    out.enabled.assign(n_out, {});
    out.priority.assign(n_out, 0);
    out.delta.assign(out.num_envs(), std::vector<std::vector<Dist>>(n_out));

    // fresh action names for the frontier pairs, one per (q,a) leaving its CEC
    std::map<std::pair<StateId, ActionId>, ActionId> frontier_action;
    for (std::size_t i = 0; i < cecs.size(); ++i) {
        const EndComponent& ec = *cecs[i];
        for (StateId q : ec.states())
            for (ActionId a : m.enabled[q]) {
                const auto& inside = ec.pairs.at(q);
                if (std::binary_search(inside.begin(), inside.end(), a)) continue;
                ActionId fa = out.num_actions();
                out.action_names.push_back("F_" + m.state_names[q] + "_" + m.action_names[a]);
                frontier_action[{q, a}] = fa;
            }
    }

    auto push_forward = [&](EnvId e, StateId q, ActionId a) {
        Dist d = m.dist(e, q, a);
        for (auto& [t, p] : d.entries) t = res.state_map[t];
        d.normalize_entries();
        return d;
    };

    for (StateId q = 0; q < m.num_states(); ++q) {
        if (cec_of[q] >= 0) continue;
        StateId nq = res.state_map[q];
        out.priority[nq] = m.priority[q];
        out.enabled[nq] = m.enabled[q];
        for (EnvId e = 0; e < m.num_envs(); ++e)
            for (ActionId a : m.enabled[q]) out.delta[e][nq].push_back(push_forward(e, q, a));
    }
    for (std::size_t i = 0; i < cecs.size(); ++i) {
        const EndComponent& ec = *cecs[i];
        StateId sd = cec_state[i];
        int minp = m.priority[ec.min_state()];
        for (StateId q : ec.states()) minp = std::min(minp, m.priority[q]);
        out.priority[sd] = minp;
        std::vector<std::pair<ActionId, std::pair<StateId, ActionId>>> acts;
        acts.emplace_back(stay, std::make_pair(-1, -1));
        for (StateId q : ec.states())
            for (ActionId a : m.enabled[q]) {
                auto it = frontier_action.find({q, a});
                if (it != frontier_action.end())
                    acts.emplace_back(it->second, std::make_pair(q, a));
            }
        std::sort(acts.begin(), acts.end());
        for (const auto& [fa, _] : acts) out.enabled[sd].push_back(fa);
        for (EnvId e = 0; e < m.num_envs(); ++e)
            for (const auto& [fa, src] : acts) {
                if (fa == stay)
                    out.delta[e][sd].push_back(
                        Dist::dirac(cec_winning[i] ? res.win : res.lose));
                else
                    out.delta[e][sd].push_back(push_forward(e, src.first, src.second));
            }
    }
    for (StateId sink : {res.win, res.lose}) {
        out.enabled[sink] = {stay};
        out.priority[sink] = sink == res.win ? 0 : 1;
        for (EnvId e = 0; e < m.num_envs(); ++e) out.delta[e][sink] = {Dist::dirac(sink)};
    }
    out.initial = res.state_map[m.initial];
    return res;
}

inline PurgeResult purge(const Memdp& m) { return purge(m, m.all_envs()); }

// ---------------------------------------------------------------------------
// Synthesis constants. eta is a quarter of the smallest cross-environment
// probability gap (strictly below half of it); n0, n and the memory bound N
// follow the imitation construction. N is kept in factored form because its
// digit count is exponential in n; value() materializes it when that is sane.
// ---------------------------------------------------------------------------
struct SynthesisConstants {
    Rat eta;
    Rat nu;
    Int n0;
    Int n;
    struct FactoredInt {
        unsigned long base = 1;
        Int exponent;
        Int multiplier;
        Int value(std::size_t max_bits = 1u << 24) const {
            Rat lg = Rat(exponent) * (base > 1 ? ln_upper(rat_of(base)) : Rat(0)) /
                     ln_lower(rat_of(2));
            if (lg > Rat(static_cast<long>(max_bits))) throw MemoryBudgetExceeded(max_bits);
            Int r;
            mpz_ui_pow_ui(r.get_mpz_t(), base, exponent.get_ui());
            return r * multiplier;
        }
    };
    FactoredInt memory;  // N = base^exponent * multiplier
};

inline SynthesisConstants synthesis_constants(const Memdp& m, const Rat& eps) {
    auto gap = min_probability_gap(m, m.all_envs());
    if (!gap) throw NoDistinguishingTransition();
    SynthesisConstants c;
    c.eta = *gap / 4;
    c.nu = min_positive_probability(m, m.all_envs());
    long q = m.num_states();
    long acts = m.num_actions();
    Rat qa = rat_of(q * acts);
    c.n0 = ceil_rat(8 * qa * qa * qa / (eps * c.eta * c.eta));
    Rat inv_nu_pow = pow_rat(1 / c.nu, static_cast<unsigned long>(2 * q));
    Rat inner = Rat(c.n0);
    Rat log_term = ln_upper(16 / eps);
    if (log_term > inner) inner = log_term;
    c.n = ceil_rat(2 * inv_nu_pow * inner);
    c.memory.base = static_cast<unsigned long>(2 * q);
    c.memory.exponent = c.n * (m.num_envs() + 1);
    Rat lg = ln_upper(8 / eps) / (c.eta * c.eta);
    c.memory.multiplier = Int(acts) * ceil_rat(8 * lg * lg);
    return c;
}

// ---------------------------------------------------------------------------
// Constraint system for the gap problem: per-environment reachability value
// variables x[e][q][i] and one shared strategy block p[q][i][a][i'] (the
// strategy cannot observe the environment). Fixing a support or the
// zero-value sets specializes the system.
// ---------------------------------------------------------------------------
struct ConstraintSystem {
    Memdp model;
    int memory = 1;
    std::vector<std::vector<StateId>> targets;      // per env, sorted
    std::vector<std::vector<StateId>> qno;          // per env, sorted; used iff has_qno
    bool has_qno = false;
    Rat alpha, eps;
    StateId start = 0;
    std::vector<std::tuple<StateId, int, ActionId, int>> support;  // used iff has_support
    bool has_support = false;

    long x_var_count() const {
        return static_cast<long>(model.num_envs()) * model.num_states() * memory;
    }
    long p_var_count() const {
        long total = 0;
        for (StateId q = 0; q < model.num_states(); ++q)
            total += static_cast<long>(model.enabled[q].size()) * memory * memory;
        return total;
    }
};

inline ConstraintSystem build_gap_constraints(
    const Memdp& m, std::vector<std::vector<StateId>> targets, int memory, Rat alpha, Rat eps,
    std::optional<std::vector<std::tuple<StateId, int, ActionId, int>>> support = std::nullopt,
    std::optional<std::vector<std::vector<StateId>>> qno = std::nullopt) {
    ConstraintSystem cs;
    cs.model = m;
    cs.memory = memory;
    for (auto& t : targets) std::sort(t.begin(), t.end());
    cs.targets = std::move(targets);
    cs.alpha = std::move(alpha);
    cs.eps = std::move(eps);
    cs.start = m.initial;
    if (support) {
        cs.support = std::move(*support);
        std::sort(cs.support.begin(), cs.support.end());
        cs.has_support = true;
    }
    if (qno) {
        cs.qno = std::move(*qno);
        for (auto& v : cs.qno) std::sort(v.begin(), v.end());
        cs.has_qno = true;
    }
    return cs;
}

// SMT-LIB 2 export (logic QF_NRA), byte-stable: declarations and assertions
// are ordered by (environment, state, memory) ascending.
inline void write_smt2(std::ostream& os, const ConstraintSystem& cs) {
    const Memdp& m = cs.model;
    auto sym = [](std::string s) {
        for (char& c : s)
            if (!isalnum(static_cast<unsigned char>(c)) && c != '_') c = '_';
        return s;
    };
    auto xname = [&](EnvId e, StateId q, int i) {
        return "x_" + sym(m.env_names[e]) + "_" + sym(m.state_names[q]) + "_" + std::to_string(i);
    };
    auto pname = [&](StateId q, int i, ActionId a, int j) {
        return "p_" + sym(m.state_names[q]) + "_" + std::to_string(i) + "_" +
               sym(m.action_names[a]) + "_" + std::to_string(j);
    };
    auto lit = [&](const Rat& r) {
        std::string num = r.get_num().get_str();
        bool neg = false;
        if (!num.empty() && num[0] == '-') {
            neg = true;
            num = num.substr(1);
        }
        std::string body = r.get_den() == 1 ? num : "(/ " + num + " " + r.get_den().get_str() + ")";
        return neg ? "(- " + body + ")" : body;
    };
    auto in_sorted = [](const std::vector<StateId>& v, StateId q) {
        return std::binary_search(v.begin(), v.end(), q);
    };

    os << "(set-logic QF_NRA)\n";
    for (EnvId e = 0; e < m.num_envs(); ++e)
        for (StateId q = 0; q < m.num_states(); ++q)
            for (int i = 0; i < cs.memory; ++i)
                os << "(declare-const " << xname(e, q, i) << " Real)\n";
    for (StateId q = 0; q < m.num_states(); ++q)
        for (int i = 0; i < cs.memory; ++i)
            for (ActionId a : m.enabled[q])
                for (int j = 0; j < cs.memory; ++j)
                    os << "(declare-const " << pname(q, i, a, j) << " Real)\n";

    for (EnvId e = 0; e < m.num_envs(); ++e)
        for (StateId q = 0; q < m.num_states(); ++q)
            for (int i = 0; i < cs.memory; ++i) {
                if (cs.has_qno && in_sorted(cs.qno[e], q)) {
                    os << "(assert (= " << xname(e, q, i) << " 0))\n";
                } else if (in_sorted(cs.targets[e], q)) {
                    os << "(assert (= " << xname(e, q, i) << " 1))\n";
                } else {
                    os << "(assert (= " << xname(e, q, i) << " (+";
                    bool any = false;
                    for (ActionId a : m.enabled[q])
                        for (int j = 0; j < cs.memory; ++j) {
                            os << " (* " << pname(q, i, a, j) << " (+";
                            for (const auto& [t, p] : m.dist(e, q, a).entries)
                                os << " (* " << lit(p) << " " << xname(e, t, j) << ")";
                            os << "))";
                            any = true;
                        }
                    if (!any) os << " 0";
                    os << ")))\n";
                }
                os << "(assert (<= 0 " << xname(e, q, i) << "))\n";
                os << "(assert (<= " << xname(e, q, i) << " 1))\n";
            }
    for (StateId q = 0; q < m.num_states(); ++q)
        for (int i = 0; i < cs.memory; ++i) {
            os << "(assert (= (+";
            for (ActionId a : m.enabled[q])
                for (int j = 0; j < cs.memory; ++j) os << " " << pname(q, i, a, j);
            os << ") 1))\n";
            for (ActionId a : m.enabled[q])
                for (int j = 0; j < cs.memory; ++j) {
                    os << "(assert (<= 0 " << pname(q, i, a, j) << "))\n";
                    os << "(assert (<= " << pname(q, i, a, j) << " 1))\n";
                }
        }
    if (cs.has_support) {
        for (StateId q = 0; q < m.num_states(); ++q)
            for (int i = 0; i < cs.memory; ++i)
                for (ActionId a : m.enabled[q])
                    for (int j = 0; j < cs.memory; ++j) {
                        bool pos = std::binary_search(cs.support.begin(), cs.support.end(),
                                                      std::make_tuple(q, i, a, j));
                        if (pos)
                            os << "(assert (> " << pname(q, i, a, j) << " 0))\n";
                        else
                            os << "(assert (= " << pname(q, i, a, j) << " 0))\n";
                    }
    }
    Rat threshold = cs.alpha - cs.eps;
    for (EnvId e = 0; e < m.num_envs(); ++e)
        os << "(assert (>= " << xname(e, cs.start, 0) << " " << lit(threshold) << "))\n";
    os << "(check-sat)\n";
}

inline std::string to_smt2(const ConstraintSystem& cs) {
    std::ostringstream os;
    write_smt2(os, cs);
    return os.str();
}

// ---------------------------------------------------------------------------
// Memory-randomized strategies: the solution shape of the constraint system.
// row(q,i) is a distribution over (action, next-memory).
// ---------------------------------------------------------------------------
struct PStrategy {
    int memory = 1;
    // [q][i] -> list of ((a, i'), prob), each row sums to 1
    std::vector<std::vector<std::vector<std::pair<std::pair<ActionId, int>, Rat>>>> rows;

    static PStrategy uniform_over(const Memdp& m, int memory,
                                  const std::vector<std::tuple<StateId, int, ActionId, int>>& sup) {
        PStrategy p;
        p.memory = memory;
        p.rows.assign(m.num_states(), {});
        for (StateId q = 0; q < m.num_states(); ++q) p.rows[q].resize(memory);
        for (const auto& [q, i, a, j] : sup)
            p.rows[q][i].push_back({{a, j}, Rat(1)});
        for (StateId q = 0; q < m.num_states(); ++q)
            for (int i = 0; i < memory; ++i) {
                auto& row = p.rows[q][i];
                if (row.empty()) row.push_back({{m.enabled[q].front(), i}, Rat(1)});
                Rat w = Rat(1) / Rat(static_cast<long>(row.size()));
                for (auto& [_, pr] : row) pr = w;
            }
        return p;
    }
};

// Induced chain of a PStrategy on one environment, over nodes (q, i).
inline SparseChain p_strategy_chain(const Memdp& m, EnvId e, const PStrategy& p) {
    int n = m.num_states();
    int nm = p.memory;
    SparseChain chain;
    chain.rows.assign(static_cast<std::size_t>(n) * nm, {});
    for (StateId q = 0; q < n; ++q)
        for (int i = 0; i < nm; ++i) {
            std::map<int, Rat> row;
            for (const auto& [ai, pr] : p.rows[q][i]) {
                const auto& [a, j] = ai;
                for (const auto& [t, pt] : m.dist(e, q, a).entries)
                    row[t * nm + j] += pr * pt;
            }
            auto& r = chain.rows[static_cast<std::size_t>(q) * nm + i];
            for (auto& [idx, pr] : row) r.emplace_back(idx, pr);
        }
    return chain;
}

// ---------------------------------------------------------------------------
// evaluate_fixed_strategy: reachability values of a fixed p under the
// system's target sets. The zero set is taken from the system when supplied
// (a wrong one surfaces as SingularSystem) and computed by backward graph
// reachability in the induced chain otherwise.
// ---------------------------------------------------------------------------
struct XAssignment {
    // [env][q * memory + i]
    std::vector<std::vector<Rat>> values;
    Rat value_at(EnvId e, StateId q, int i, int memory) const {
        return values[e][static_cast<std::size_t>(q) * memory + i];
    }
};

inline XAssignment evaluate_fixed_strategy(const ConstraintSystem& cs, const PStrategy& p) {
    const Memdp& m = cs.model;
    int nm = p.memory;
    XAssignment xa;
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        SparseChain chain = p_strategy_chain(m, e, p);
        int total = chain.size();
        std::vector<char> is_target(total, 0);
        for (StateId q : cs.targets[e])
            for (int i = 0; i < nm; ++i) is_target[q * nm + i] = 1;
        std::vector<char> zero(total, 0);
        if (cs.has_qno) {
            for (StateId q : cs.qno[e])
                for (int i = 0; i < nm; ++i) zero[q * nm + i] = 1;
        } else {
            // states that cannot reach the target at all
            std::vector<std::vector<int>> preds(total);
            for (int v = 0; v < total; ++v)
                for (const auto& [t, _] : chain.rows[v]) preds[t].push_back(v);
            std::vector<char> can(total, 0);
            std::vector<int> queue;
            for (int v = 0; v < total; ++v)
                if (is_target[v]) {
                    can[v] = 1;
                    queue.push_back(v);
                }
            for (std::size_t h = 0; h < queue.size(); ++h)
                for (int u : preds[queue[h]])
                    if (!can[u]) {
                        can[u] = 1;
                        queue.push_back(u);
                    }
            for (int v = 0; v < total; ++v) zero[v] = !can[v];
        }
        std::vector<std::optional<Rat>> fixed(total);
        for (int v = 0; v < total; ++v) {
            if (is_target[v])
                fixed[v] = Rat(1);
            else if (zero[v])
                fixed[v] = Rat(0);
        }
        auto sol = solve_absorption(chain, fixed);
        xa.values.push_back(std::move(sol.values));
    }
    return xa;
}

// Parity value of a fixed p: winning bottom SCCs of the induced chain (least
// priority even), then absorption. Independent of any supplied target sets.
inline std::vector<Rat> p_strategy_parity_values(const Memdp& m, const PStrategy& p) {
    std::vector<Rat> out;
    int nm = p.memory;
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        SparseChain chain = p_strategy_chain(m, e, p);
        int total = chain.size();
        auto comps = detail::sccs_of_chain(chain);
        std::vector<std::optional<Rat>> fixed(total);
        for (auto& comp : comps) {
            std::vector<char> inside(total, 0);
            for (int v : comp) inside[v] = 1;
            bool bottom = true;
            for (int v : comp)
                for (const auto& [t, _] : chain.rows[v])
                    if (!inside[t]) {
                        bottom = false;
                        break;
                    }
            if (!bottom) continue;
            int minp = -1;
            for (int v : comp) {
                int pr = m.priority[v / nm];
                if (minp < 0 || pr < minp) minp = pr;
            }
            for (int v : comp) fixed[v] = minp % 2 == 0 ? Rat(1) : Rat(0);
        }
        auto sol = solve_absorption(chain, fixed);
        out.push_back(sol.values[static_cast<std::size_t>(m.initial) * nm + 0]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gap solver.
// ---------------------------------------------------------------------------
struct GapBudget {
    int restarts = 8;
    int iterations = 80;
    long tiny_support_limit = 64;  // exhaustive mode when (|Q| mem)^2 |A| fits
    std::uint64_t seed = 1;
};

struct GapAnswer {
    bool yes = false;
    // present when yes:
    std::optional<PStrategy> strategy;
    std::shared_ptr<StrategyAutomaton> automaton;  // set when the witness came
                                                   // from qualitative synthesis
    std::vector<Rat> certified_values;             // per environment
    // present when no:
    std::size_t memory_cap = 0;
    std::string effort;
};

namespace detail {

inline Rat min_of(const std::vector<Rat>& v) {
    Rat m = v.empty() ? Rat(0) : v[0];
    for (const Rat& x : v)
        if (x < m) m = x;
    return m;
}

inline PStrategy random_pstrategy(const Memdp& m, int memory, SplitMix64& rng) {
    PStrategy p;
    p.memory = memory;
    p.rows.assign(m.num_states(), {});
    for (StateId q = 0; q < m.num_states(); ++q) {
        p.rows[q].resize(memory);
        for (int i = 0; i < memory; ++i) {
            auto& row = p.rows[q][i];
            Rat total(0);
            for (ActionId a : m.enabled[q])
                for (int j = 0; j < memory; ++j) {
                    Rat w = rat_of(1 + static_cast<long>(rng.next_below(16)));
                    row.push_back({{a, j}, w});
                    total += w;
                }
            for (auto& [_, pr] : row) pr /= total;
        }
    }
    return p;
}

inline void local_search(const Memdp& m, PStrategy& p, Rat& best, int iterations,
                         SplitMix64& rng) {
    Rat step(1, 2);
    for (int it = 0; it < iterations; ++it) {
        StateId q = static_cast<StateId>(rng.next_below(m.num_states()));
        int i = static_cast<int>(rng.next_below(p.memory));
        auto& row = p.rows[q][i];
        if (row.size() < 2) continue;
        std::size_t k = rng.next_below(row.size());
        PStrategy cand = p;
        auto& crow = cand.rows[q][i];
        // pull mass toward coordinate k
        for (std::size_t j = 0; j < crow.size(); ++j) {
            if (j == k)
                crow[j].second = crow[j].second + step * (1 - crow[j].second);
            else
                crow[j].second = crow[j].second * (1 - step);
        }
        Rat total(0);
        for (auto& [_, pr] : crow) total += pr;
        for (auto& [_, pr] : crow) pr /= total;
        Rat v = min_of(p_strategy_parity_values(m, cand));
        if (v > best) {
            best = v;
            p = cand;
        } else {
            step = step * rat_of(9, 10);
            if (step < rat_of(1, 64)) step = rat_of(1, 2);
        }
    }
}

// Enumerate supports as a product over (q,i) of the nonempty subsets of
// A_q x [N]. Calls fn for each; returns false if the count exceeds `limit`.
inline bool for_each_support(
    const Memdp& m, int memory, long limit,
    const std::function<void(const std::vector<std::tuple<StateId, int, ActionId, int>>&)>& fn) {
    struct Slot {
        StateId q;
        int i;
        std::vector<std::pair<ActionId, int>> options;
        std::uint64_t subset = 1;
    };
    std::vector<Slot> slots;
    double count = 1;
    for (StateId q = 0; q < m.num_states(); ++q)
        for (int i = 0; i < memory; ++i) {
            Slot s;
            s.q = q;
            s.i = i;
            for (ActionId a : m.enabled[q])
                for (int j = 0; j < memory; ++j) s.options.emplace_back(a, j);
            if (s.options.size() > 20) return false;
            count *= static_cast<double>((1ULL << s.options.size()) - 1);
            if (count > static_cast<double>(limit) * 1024) return false;
            slots.push_back(std::move(s));
        }
    // odometer over nonempty subsets
    for (;;) {
        std::vector<std::tuple<StateId, int, ActionId, int>> sup;
        for (const auto& s : slots)
            for (std::size_t b = 0; b < s.options.size(); ++b)
                if ((s.subset >> b) & 1)
                    sup.emplace_back(s.q, s.i, s.options[b].first, s.options[b].second);
        fn(sup);
        int pos = static_cast<int>(slots.size()) - 1;
        while (pos >= 0) {
            std::uint64_t full = (1ULL << slots[pos].options.size()) - 1;
            if (slots[pos].subset < full) {
                ++slots[pos].subset;
                break;
            }
            slots[pos].subset = 1;
            --pos;
        }
        if (pos < 0) break;
    }
    return true;
}

}  // namespace detail

inline GapAnswer solve_gap(const Memdp& model, const Objective& obj, const Rat& alpha,
                           const Rat& eps, int mem_cap, const GapBudget& budget = {}) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in (0,1]");
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    if (mem_cap < 1) throw std::invalid_argument("memory cap must be at least 1");
    Memdp m = encode_objective(model, obj);
    Rat threshold = alpha - eps;
    GapAnswer answer;
    answer.memory_cap = static_cast<std::size_t>(mem_cap);

    auto certify_yes = [&](PStrategy p) -> bool {
        auto values = p_strategy_parity_values(m, p);
        if (detail::min_of(values) >= threshold) {
            answer.yes = true;
            answer.strategy = std::move(p);
            answer.certified_values = std::move(values);
            return true;
        }
        return false;
    };

    // Qualitative fast path: a limit-sure winning start admits a strategy with
    // value >= alpha - eps for a suitable epsilon, whenever the cap admits it.
    if (threshold <= 0) {
        certify_yes(PStrategy::uniform_over(m, 1, {}));
        return answer;
    }
    {
        auto solver = LsSolver::create(m);
        if (solver->region(m.all_envs()).contains(m.initial)) {
            Rat eps_target = 1 - threshold;
            if (eps_target >= 1) eps_target = rat_of(1, 2);
            try {
                auto sigma =
                    synthesize_ls_strategy(solver, m.all_envs(), eps_target,
                                           static_cast<std::size_t>(mem_cap));
                auto eval = evaluate_exact(m, m.all_envs(), *sigma, m.initial,
                                           static_cast<std::size_t>(mem_cap));
                if (!eval.approximate && eval.min_value() >= threshold) {
                    answer.yes = true;
                    answer.automaton = sigma;
                    answer.certified_values = eval.values;
                    return answer;
                }
            } catch (const MemoryBudgetExceeded&) {
                // fall through to the search paths
            }
        }
    }

    long tiny = static_cast<long>(m.num_states()) * mem_cap;
    tiny = tiny * tiny * m.num_actions();
    long evals = 0;
    if (tiny <= budget.tiny_support_limit) {
        // Exhaustive support enumeration; each support is checked with the
        // uniform point of its face, then polished.
        bool found = false;
        bool complete = detail::for_each_support(
            m, mem_cap, budget.tiny_support_limit,
            [&](const std::vector<std::tuple<StateId, int, ActionId, int>>& sup) {
                if (found) return;
                ++evals;
                PStrategy p = PStrategy::uniform_over(m, mem_cap, sup);
                Rat v = detail::min_of(p_strategy_parity_values(m, p));
                SplitMix64 rng = SplitMix64::substream(budget.seed, evals);
                detail::local_search(m, p, v, budget.iterations / 4, rng);
                if (v >= threshold && certify_yes(p)) found = true;
            });
        if (found) return answer;
        if (complete) {
            answer.yes = false;
            answer.effort = "exhaustive support enumeration, " + std::to_string(evals) +
                            " supports, memory " + std::to_string(mem_cap);
            return answer;
        }
    }

    Rat best(-1);
    PStrategy best_p;
    for (int r = 0; r < budget.restarts; ++r) {
        SplitMix64 rng = SplitMix64::substream(budget.seed, 1000 + r);
        PStrategy p = detail::random_pstrategy(m, mem_cap, rng);
        Rat v = detail::min_of(p_strategy_parity_values(m, p));
        detail::local_search(m, p, v, budget.iterations, rng);
        evals += budget.iterations + 1;
        if (v > best) {
            best = v;
            best_p = p;
        }
    }
    if (best >= threshold && certify_yes(best_p)) return answer;
    answer.yes = false;
    answer.effort = "local search, " + std::to_string(budget.restarts) + " restarts, " +
                    std::to_string(evals) + " evaluations, memory " + std::to_string(mem_cap);
    return answer;
}

}  // namespace memdp

#endif
