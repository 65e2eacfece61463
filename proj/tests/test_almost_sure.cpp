#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace memdp;

namespace {

std::vector<StateId> names_to_ids(const Memdp& m, const std::vector<std::string>& names) {
    std::vector<StateId> ids;
    for (const auto& n : names) ids.push_back(m.state_id(n));
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

TEST_CASE("revealing transitions of the figures") {
    Memdp f4 = fig4_model();
    auto rev4 = revealing_transitions(f4, f4.all_envs());
    bool found = false;
    for (const auto& t : rev4)
        if (t.from == f4.state_id("q2") && t.action == f4.action_id("a") &&
            t.to == f4.state_id("q5")) {
            found = true;
            CHECK(t.knowledge == EnvSet::single(0));
        }
    CHECK(found);

    Memdp f3 = fig3_model();
    auto rev3 = revealing_transitions(f3, f3.all_envs());
    auto has = [&](const char* from, const char* act, const char* to, EnvSet k) {
        for (const auto& t : rev3)
            if (t.from == f3.state_id(from) && t.action == f3.action_id(act) &&
                t.to == f3.state_id(to))
                return t.knowledge == k;
        return false;
    };
    CHECK(has("q2", "a", "q3", EnvSet::single(0)));
    CHECK(has("q2", "a", "q4", EnvSet::single(1)));
    for (const auto& t : rev3)
        CHECK(!(t.from == f3.state_id("q1") && t.action == f3.action_id("c")));
}

TEST_CASE("revealed form moves revealing mass onto the sinks") {
    Memdp m = fig4_model();
    auto always_lose = [](EnvSet, StateId) { return false; };
    RevealedModel r = to_revealed_form(m, m.all_envs(), always_lose);
    // e1: (q2,a) had 1/2 on q5, now on __q_lose
    CHECK(r.model.dist(0, m.state_id("q2"), m.action_id("a")).prob(r.lose) == rat_of(1, 2));
    CHECK(r.model.dist(0, m.state_id("q2"), m.action_id("a")).prob(m.state_id("q5")) == 0);
    // non-revealing transitions untouched
    CHECK(r.model.dist(1, m.state_id("q2"), m.action_id("a")).prob(m.state_id("q1")) == 1);
    CHECK(r.model.is_sink(r.win));
    CHECK(r.model.is_sink(r.lose));

    // fig3 is already in revealed form: no mass beyond the drawn sinks moves
    Memdp f3 = fig3_model();
    RevealedModel r3 = to_revealed_form(f3, f3.all_envs(), [&](EnvSet k, StateId q) {
        return as_parity(f3, k).contains(q);
    });
    CHECK(r3.model.num_states() == f3.num_states() + 2);
    for (const auto& [t, winning] : r3.redirects) {
        CHECK(t.knowledge.count() == 1);
        CHECK(winning == (f3.priority[t.to] == 0));
    }
}

TEST_CASE("almost-sure parity regions of the figures") {
    Memdp f3 = fig3_model();
    Region r3 = as_parity(f3);
    CHECK(r3.states == names_to_ids(f3, {"q3"}));
    CHECK(!r3.contains(f3.state_id("q1")));

    Memdp f4 = fig4_model();
    Region r4 = as_parity(f4);
    CHECK(!r4.contains(f4.state_id("q1")));
    CHECK(r4.contains(f4.state_id("q5")));
}

TEST_CASE("missing-card models are almost-sure winning from the hub") {
    for (int n : {3, 4}) {
        Memdp m = missing_card(n);
        Memdp enc = encode_objective(m, Objective::reach({m.state_id("win")}));
        Region r = as_parity(enc);
        CHECK(r.contains(m.state_id("0")));
    }
}

TEST_CASE("single environment base case equals the mdp solver") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        Memdp m = testing::random_memdp(seed, opt);
        Region r = as_parity(m, EnvSet::single(0));
        auto sol = almost_sure_mdp(m, Objective::parity(), 0);
        CHECK(r.states == sol.region.states);
    }
}

TEST_CASE("monotone in the environment set") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        opt.envs = 3;
        Memdp m = testing::random_memdp(seed, opt);
        auto solver = AsSolver::create(m);
        EnvSet full = m.all_envs();
        Region rf = solver->parity_region(full);
        for (EnvId e = 0; e < 3; ++e) {
            Region sub = solver->parity_region(full.without(e));
            for (StateId q : rf.states) CHECK(sub.contains(q));
        }
    }
}

TEST_CASE("support perturbations do not change the almost-sure region") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        opt.envs = 2;
        Memdp m = testing::random_memdp(seed, opt);
        Memdp p = testing::perturb_preserving_supports(m, seed + 1000);
        CHECK(as_parity(m).states == as_parity(p).states);
    }
}

TEST_CASE("region agrees with the deduplicated model") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 4;
        opt.envs = 3;
        opt.shared_supports = true;  // guarantees duplicates
        Memdp m = testing::random_memdp(seed, opt);
        auto dd = dedup_environments(m);
        CHECK(as_parity(m).states == as_parity(dd.model).states);
    }
}

TEST_CASE("revealed models keep the win sink inside the region") {
    Memdp f3 = fig3_model();
    auto solver = AsSolver::create(f3);
    RevealedModel r = to_revealed_form(f3, f3.all_envs(), [&](EnvSet k, StateId q) {
        return solver->parity_region(k).contains(q);
    });
    Region region = as_parity(r.model);
    CHECK(region.contains(r.win));
    CHECK(!region.contains(r.lose));
}

TEST_CASE("almost-sure safety") {
    Memdp f4 = fig4_model();
    std::vector<StateId> t = names_to_ids(f4, {"q1", "q2", "q5"});
    Region r = as_safety(f4, f4.all_envs(), t);
    CHECK(r.states == t);

    // whole state space and empty set
    std::vector<StateId> all;
    for (StateId q = 0; q < f4.num_states(); ++q) all.push_back(q);
    CHECK(as_safety(f4, f4.all_envs(), all).states == all);
    CHECK(as_safety(f4, f4.all_envs(), {}).states.empty());

    // contained in the allowed set, always
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        opt.envs = 2;
        Memdp m = testing::random_memdp(seed, opt);
        std::vector<StateId> allowed;
        for (StateId q = 0; q < m.num_states(); ++q)
            if ((seed + q) % 3) allowed.push_back(q);
        for (StateId q : as_safety(m, m.all_envs(), allowed).states)
            CHECK(std::binary_search(allowed.begin(), allowed.end(), q));
    }
}

TEST_CASE("synthesized strategies win with probability one on the figures") {
    for (Memdp m : {fig3_model(), fig4_model()}) {
        auto solver = AsSolver::create(m);
        Region w = solver->parity_region(m.all_envs());
        auto sigma = synthesize_as_strategy(solver, m.all_envs(), w);
        for (StateId q : w.states) {
            auto r = evaluate_exact(m, m.all_envs(), *sigma, q);
            for (const Rat& v : r.values) CHECK(v == 1);
        }
    }
}

TEST_CASE("synthesized strategy identifies the missing card") {
    for (int n : {3, 4}) {
        Memdp enc = encode_objective(missing_card(n),
                                     Objective::reach({missing_card(n).state_id("win")}));
        auto solver = AsSolver::create(enc);
        Region w = solver->parity_region(enc.all_envs());
        REQUIRE(w.contains(enc.state_id("0")));
        auto sigma = synthesize_as_strategy(solver, enc.all_envs(), w);
        auto r = evaluate_exact(enc, enc.all_envs(), *sigma, enc.state_id("0"));
        for (const Rat& v : r.values) CHECK(v == 1);
    }
}

TEST_CASE("single-environment synthesis is memoryless") {
    Memdp m = fig3_model();
    auto solver = AsSolver::create(m);
    Region w = solver->parity_region(EnvSet::single(0));
    auto sigma = synthesize_as_strategy(solver, EnvSet::single(0), w);
    auto flat = expand_strategy(m, EnvSet::single(0), *sigma, w.states);
    CHECK(flat.memory_size == 1);
    CHECK(flat.pure());
}

TEST_CASE("random multi-environment strategies evaluate to one on their region") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        opt.envs = 2;
        Memdp m = testing::random_memdp(seed, opt);
        auto solver = AsSolver::create(m);
        Region w = solver->parity_region(m.all_envs());
        if (w.states.empty()) continue;
        auto sigma = synthesize_as_strategy(solver, m.all_envs(), w);
        for (StateId q : w.states) {
            auto r = evaluate_exact(m, m.all_envs(), *sigma, q);
            for (const Rat& v : r.values) CHECK(v == 1);
        }
    }
}
