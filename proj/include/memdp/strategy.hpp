#ifndef MEMDP_STRATEGY_HPP
#define MEMDP_STRATEGY_HPP

#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "memdp/errors.hpp"
#include "memdp/model.hpp"

namespace memdp {

// ---------------------------------------------------------------------------
// Finite Moore-style strategy: finite memory, a distribution over actions per
// (memory, state), and a deterministic memory update on observing the step
// (state, action, successor). Memory states are plain ints; implementations
// with structured memory intern their states lazily, so only the part of the
// machine reachable in the product is ever materialized.
// ---------------------------------------------------------------------------
class StrategyAutomaton {
public:
    virtual ~StrategyAutomaton() = default;

    virtual int initial_memory(StateId q0) const = 0;
    virtual Dist output(int mem, StateId q) const = 0;  // over action ids
    virtual int update(int mem, StateId q, ActionId a, StateId to) const = 0;

    // Upper bound on memory states materialized so far (diagnostics).
    virtual std::size_t memory_count() const = 0;
    virtual bool pure() const { return true; }
};

// ---------------------------------------------------------------------------
// Flat table-backed strategy; the serialization target.
// ---------------------------------------------------------------------------
class FlatStrategy final : public StrategyAutomaton {
public:
    int memory_size = 0;
    std::map<StateId, int> initial;                          // per start state
    std::map<std::pair<int, StateId>, Dist> outputs;          // (mem, state)
    std::map<std::tuple<int, StateId, ActionId, StateId>, int> updates;

    int initial_memory(StateId q0) const override {
        auto it = initial.find(q0);
        if (it == initial.end()) throw NotLimitSureWinning(std::to_string(q0));
        return it->second;
    }
    Dist output(int mem, StateId q) const override {
        auto it = outputs.find({mem, q});
        if (it == outputs.end()) return Dist{};
        return it->second;
    }
    int update(int mem, StateId q, ActionId a, StateId to) const override {
        auto it = updates.find({mem, q, a, to});
        if (it == updates.end()) return mem;
        return it->second;
    }
    std::size_t memory_count() const override { return static_cast<std::size_t>(memory_size); }
    bool pure() const override {
        for (const auto& [_, d] : outputs)
            if (d.entries.size() > 1) return false;
        return true;
    }
};

// Memoryless strategy wrapped as a one-memory-state automaton.
class MemorylessAutomaton final : public StrategyAutomaton {
public:
    explicit MemorylessAutomaton(std::vector<Dist> choice) : choice_(std::move(choice)) {}
    int initial_memory(StateId) const override { return 0; }
    Dist output(int, StateId q) const override {
        if (q < 0 || q >= static_cast<int>(choice_.size())) return Dist{};
        return choice_[q];
    }
    int update(int, StateId, ActionId, StateId) const override { return 0; }
    std::size_t memory_count() const override { return 1; }

private:
    std::vector<Dist> choice_;
};

// ---------------------------------------------------------------------------
// Flat expansion: explore the (state, memory) pairs reachable from the given
// start states under any environment of K, renumbering memories densely.
// Throws MemoryBudgetExceeded past the cap.
// ---------------------------------------------------------------------------
inline FlatStrategy expand_strategy(const Memdp& m, EnvSet K, const StrategyAutomaton& sigma,
                                    const std::vector<StateId>& starts,
                                    std::size_t memory_cap = 1000000) {
    FlatStrategy flat;
    std::map<int, int> memory_id;
    auto intern = [&](int mem) {
        auto [it, inserted] = memory_id.emplace(mem, static_cast<int>(memory_id.size()));
        if (inserted && memory_id.size() > memory_cap) throw MemoryBudgetExceeded(memory_cap);
        return it->second;
    };

    std::vector<std::pair<StateId, int>> work;
    std::map<std::pair<StateId, int>, char> seen;
    for (StateId q0 : starts) {
        int m0 = sigma.initial_memory(q0);
        flat.initial[q0] = intern(m0);
        if (seen.emplace(std::make_pair(q0, m0), 1).second) work.emplace_back(q0, m0);
    }
    while (!work.empty()) {
        auto [q, mem] = work.back();
        work.pop_back();
        Dist out = sigma.output(mem, q);
        flat.outputs[{intern(mem), q}] = out;
        for (const auto& [a, pa] : out.entries) {
            (void)pa;
            for (EnvId e : K.members()) {
                for (StateId t : m.dist(e, q, a).support()) {
                    int nm = sigma.update(mem, q, a, t);
                    flat.updates[{intern(mem), q, a, t}] = intern(nm);
                    if (seen.emplace(std::make_pair(t, nm), 1).second) work.emplace_back(t, nm);
                }
            }
        }
    }
    flat.memory_size = static_cast<int>(memory_id.size());
    return flat;
}

}  // namespace memdp

#endif
