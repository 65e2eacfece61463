#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace memdp;

namespace {

std::vector<StateId> sorted_states(const EndComponent& ec) { return ec.states(); }

}  // namespace

TEST_CASE("mec decomposition of fig3 in e1") {
    Memdp m = fig3_model();
    auto mecs = mec_decomposition(m, 0);
    REQUIRE(mecs.size() == 3);
    CHECK(sorted_states(mecs[0]) ==
          std::vector<StateId>{m.state_id("q1"), m.state_id("q2")});
    CHECK(mecs[0].pairs.at(m.state_id("q2")) == std::vector<ActionId>{m.action_id("c")});
    CHECK(sorted_states(mecs[1]) == std::vector<StateId>{m.state_id("q3")});
    CHECK(sorted_states(mecs[2]) == std::vector<StateId>{m.state_id("q4")});
}

TEST_CASE("single absorbing state is its own mec; acyclic chains keep only the sink") {
    RawModel raw;
    raw.states = {"q0", "q1", "sink"};
    raw.actions = {"a"};
    raw.enabled = {{"q0", {"a"}}, {"q1", {"a"}}, {"sink", {"a"}}};
    raw.environments = {{"e1",
                         {{"q0", {{"a", {{"q1", "1"}}}}},
                          {"q1", {{"a", {{"sink", "1"}}}}},
                          {"sink", {{"a", {{"sink", "1"}}}}}}}};
    raw.initial = "q0";
    Memdp m = validate(raw);
    auto mecs = mec_decomposition(m, 0);
    REQUIRE(mecs.size() == 1);
    CHECK(sorted_states(mecs[0]) == std::vector<StateId>{m.state_id("sink")});
}

TEST_CASE("mec decomposition agrees with subset enumeration on random models") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        testing::RandomModelOptions opt;
        opt.min_states = 2;
        opt.max_states = 4;
        opt.max_actions = 2;
        Memdp m = testing::random_memdp(seed, opt);
        auto got = mec_decomposition(m, 0);
        auto want = testing::brute_force_mecs(m, 0);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].pairs == want[i].pairs);
    }
}

TEST_CASE("mecs are pairwise disjoint and closed") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        Memdp m = testing::random_memdp(seed, opt);
        auto mecs = mec_decomposition(m, 0);
        std::set<StateId> seen;
        for (const auto& ec : mecs)
            for (StateId q : ec.states()) {
                CHECK(!seen.count(q));
                seen.insert(q);
            }
        for (const auto& ec : mecs)
            for (const auto& [q, acts] : ec.pairs) {
                CHECK(!acts.empty());
                for (ActionId a : acts)
                    for (StateId t : m.dist(0, q, a).support()) CHECK(ec.contains_state(t));
            }
    }
}

TEST_CASE("almost-sure parity on fig3 environment 1") {
    Memdp m = fig3_model();
    auto sol = almost_sure_mdp(m, Objective::parity(), 0);
    CHECK(sol.region.states == std::vector<StateId>{m.state_id("q1"), m.state_id("q2"),
                                                    m.state_id("q3")});
    CHECK(sol.strategy.pure_action(m.state_id("q2")) == m.action_id("a"));
}

TEST_CASE("all-even and all-odd priorities") {
    testing::RandomModelOptions opt;
    opt.max_states = 5;
    Memdp m = testing::random_memdp(7, opt);
    for (StateId q = 0; q < m.num_states(); ++q) m.priority[q] = 2;
    auto every = almost_sure_mdp(m, Objective::parity(), 0);
    CHECK(static_cast<int>(every.region.states.size()) == m.num_states());
    for (StateId q = 0; q < m.num_states(); ++q) m.priority[q] = 1;
    auto none = almost_sure_mdp(m, Objective::parity(), 0);
    CHECK(none.region.states.empty());
}

TEST_CASE("almost-sure region matches strategy enumeration on random models") {
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        testing::RandomModelOptions opt;
        opt.min_states = 2;
        opt.max_states = 5;
        opt.max_actions = 2;
        Memdp m = testing::random_memdp(seed, opt);
        auto got = almost_sure_mdp(m, Objective::parity(), 0);
        auto want = testing::brute_force_as_region(m, 0);
        CHECK(got.region.states == want);
    }
}

TEST_CASE("reach regions contain the target and stay closed under the witness") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        Memdp m = testing::random_memdp(seed, opt);
        std::vector<StateId> target{static_cast<StateId>(seed % m.num_states())};
        auto sol = almost_sure_mdp(m, Objective::reach(target), 0);
        for (StateId t : target) CHECK(sol.region.contains(t));
        for (StateId q : sol.region.states) {
            ActionId a = sol.strategy.pure_action(q);
            if (std::binary_search(target.begin(), target.end(), q)) continue;
            for (StateId t : m.dist(0, q, a).support()) CHECK(sol.region.contains(t));
        }
    }
}

TEST_CASE("end-component winner is decided by the least priority") {
    Memdp m = fig5_model();
    EndComponent d;
    d.scope = m.all_envs();
    d.pairs[m.state_id("q3")] = {m.action_id("a")};
    d.pairs[m.state_id("q4")] = {m.action_id("a")};
    CHECK(ec_is_winning(d, m.priority));  // priorities 0 and 0

    EndComponent dp;
    dp.scope = m.all_envs();
    dp.pairs[m.state_id("q5")] = {m.action_id("a")};
    dp.pairs[m.state_id("q6")] = {m.action_id("a")};
    CHECK(!ec_is_winning(dp, m.priority));  // priorities 1 and 1

    std::vector<int> prio(m.num_states(), 1);
    prio[m.state_id("q3")] = 0;
    CHECK(ec_is_winning(d, prio));  // min = 0 even
}
