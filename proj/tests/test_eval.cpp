#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "test_support.hpp"

using namespace memdp;

namespace {

MemorylessAutomaton pure(const Memdp& m, const std::map<std::string, std::string>& picks) {
    std::vector<Dist> choice(m.num_states());
    for (StateId q = 0; q < m.num_states(); ++q) choice[q] = Dist::dirac(m.enabled[q].front());
    for (const auto& [state, action] : picks)
        choice[m.state_id(state)] = Dist::dirac(m.action_id(action));
    return MemorylessAutomaton(std::move(choice));
}

}  // namespace

TEST_CASE("memoryless evaluation on fig3 environment 1") {
    Memdp m = fig3_model();
    StateId q1 = m.state_id("q1");

    auto forever_c = pure(m, {{"q2", "c"}});
    auto r = evaluate_exact(m, EnvSet::single(0), forever_c, q1);
    CHECK(r.values[0] == 0);
    CHECK(r.bscc_counts[0] == 1);
    CHECK(r.winning_bscc_counts[0] == 0);

    auto plays_a = pure(m, {{"q2", "a"}});
    CHECK(evaluate_exact(m, EnvSet::single(0), plays_a, q1).values[0] == 1);

    std::vector<Dist> mix(m.num_states());
    for (StateId q = 0; q < m.num_states(); ++q) mix[q] = Dist::dirac(m.enabled[q].front());
    mix[m.state_id("q1")] = Dist::dirac(m.action_id("c"));
    mix[m.state_id("q2")] =
        Dist{{{m.action_id("a"), rat_of(1, 2)}, {m.action_id("b"), rat_of(1, 2)}}};
    MemorylessAutomaton half(std::move(mix));
    CHECK(evaluate_exact(m, EnvSet::single(0), half, q1).values[0] == rat_of(1, 2));
}

TEST_CASE("evaluation is invariant under unreachable memory states") {
    Memdp m = fig3_model();
    StateId q1 = m.state_id("q1");
    FlatStrategy f;
    f.memory_size = 5;  // three junk memory states never reached
    for (StateId q = 0; q < m.num_states(); ++q) {
        f.initial[q] = 0;
        for (int mem = 0; mem < 5; ++mem)
            f.outputs[{mem, q}] = Dist::dirac(
                q == m.state_id("q2") ? m.action_id("a") : m.enabled[q].front());
    }
    auto r = evaluate_exact(m, m.all_envs(), f, q1);
    CHECK(r.values[0] == 1);

    FlatStrategy g = f;
    g.memory_size = 1;
    auto r2 = evaluate_exact(m, m.all_envs(), g, q1);
    CHECK(r.values == r2.values);
}

TEST_CASE("simulation classifies runs against the product chain") {
    Memdp m = fig3_model();
    StateId q1 = m.state_id("q1");

    auto forever_c = pure(m, {{"q2", "c"}});
    auto stats = simulate(m, 0, forever_c, q1, 1000, 200, 42);
    CHECK(stats.wins == 0);

    Memdp one = one_shot_model();
    auto go = pure(one, {});
    auto s = simulate(one, 0, go, one.initial, 10000, 50, 7);
    CHECK(s.undecided == 0);
    // exact value 3/5; binomial concentration at this seed
    CHECK(s.win_fraction() > 0.57);
    CHECK(s.win_fraction() < 0.63);
}

TEST_CASE("simulation is reproducible and exports csv traces") {
    Memdp one = one_shot_model();
    auto go = pure(one, {});
    std::vector<SimOutcome> t1, t2;
    auto s1 = simulate(one, 0, go, one.initial, 100, 50, 99, &t1);
    auto s2 = simulate(one, 0, go, one.initial, 100, 50, 99, &t2);
    CHECK(s1.wins == s2.wins);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        CHECK(t1[i].outcome == t2[i].outcome);
        CHECK(t1[i].final_state == t2[i].final_state);
    }
    std::ostringstream os;
    write_trace_csv(os, one, t1);
    std::string csv = os.str();
    CHECK(csv.rfind("run,outcome,steps,final_state\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);
}

TEST_CASE("simulation agrees with exact evaluation on random models") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        testing::RandomModelOptions opt;
        opt.max_states = 5;
        Memdp m = testing::random_memdp(seed, opt);
        auto sol = almost_sure_mdp(m, Objective::parity(), 0);
        MemorylessAutomaton sigma(sol.strategy.choice);
        auto exact = evaluate_exact(m, EnvSet::single(0), sigma, m.initial);
        auto stats = simulate(m, 0, sigma, m.initial, 10000, 400, seed);
        double e = to_double(exact.values[0]);
        // undecided mass may fall either way
        CHECK(stats.win_fraction() <= e + 0.02 + stats.undecided_fraction());
        CHECK(stats.win_fraction() >= e - 0.02 - stats.undecided_fraction());
    }
}
