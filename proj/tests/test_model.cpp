#include <catch2/catch_amalgamated.hpp>

#include "memdp/generators.hpp"
#include "memdp/model.hpp"
#include "memdp/model_io.hpp"
#include "test_support.hpp"

using namespace memdp;

TEST_CASE("fig3 validates with two environments") {
    Memdp m = fig3_model();
    REQUIRE(m.num_envs() == 2);
    REQUIRE(m.num_states() == 4);
    REQUIRE(m.dist(0, m.state_id("q1"), m.action_id("c")).prob(m.state_id("q2")) == rat_of(1, 3));
    REQUIRE(m.dist(1, m.state_id("q1"), m.action_id("c")).prob(m.state_id("q2")) == rat_of(2, 3));
}

TEST_CASE("validation rejects unnormalized distributions") {
    RawModel raw;
    raw.states = {"q", "r"};
    raw.actions = {"a"};
    raw.enabled = {{"q", {"a"}}, {"r", {"a"}}};
    raw.environments = {{"e1",
                         {{"q", {{"a", {{"r", "1/2"}}}}},
                          {"r", {{"a", {{"r", "1"}}}}}}}};
    raw.initial = "q";
    REQUIRE_THROWS_AS(validate(raw), DistributionNotNormalized);
}

TEST_CASE("validation rejects empty action sets") {
    RawModel raw;
    raw.states = {"q"};
    raw.actions = {"a"};
    raw.enabled = {{"q", {}}};
    raw.environments = {{"e1", {}}};
    raw.initial = "q";
    REQUIRE_THROWS_AS(validate(raw), EmptyActionSet);
}

TEST_CASE("validation rejects unknown names, missing rows, negatives, reserved names") {
    RawModel base;
    base.states = {"q"};
    base.actions = {"a"};
    base.enabled = {{"q", {"a"}}};
    base.environments = {{"e1", {{"q", {{"a", {{"q", "1"}}}}}}}};
    base.initial = "q";
    REQUIRE_NOTHROW(validate(base));

    auto raw = base;
    raw.environments[0].second[0].second[0].second[0].first = "nope";
    REQUIRE_THROWS_AS(validate(raw), UnknownState);

    raw = base;
    raw.environments[0].second.clear();
    REQUIRE_THROWS_AS(validate(raw), MissingTransition);

    raw = base;
    raw.environments[0].second[0].second[0].second = {{"q", "-1/2"}};
    REQUIRE_THROWS_AS(validate(raw), NegativeProbability);

    raw = base;
    raw.states.push_back(kWinStateName);
    REQUIRE_THROWS_AS(validate(raw), ReservedStateName);
}

TEST_CASE("union of supports is uniform") {
    Memdp m = fig3_model();
    Memdp u = union_mdp(m, m.all_envs());
    StateId q1 = m.state_id("q1"), q2 = m.state_id("q2");
    CHECK(u.dist(0, q1, m.action_id("c")).prob(q1) == rat_of(1, 2));
    CHECK(u.dist(0, q1, m.action_id("c")).prob(q2) == rat_of(1, 2));

    Memdp f4 = fig4_model();
    Memdp u4 = union_mdp(f4, f4.all_envs());
    CHECK(u4.dist(0, f4.state_id("q2"), f4.action_id("a")).prob(f4.state_id("q1")) ==
          rat_of(1, 2));
    CHECK(u4.dist(0, f4.state_id("q2"), f4.action_id("a")).prob(f4.state_id("q5")) ==
          rat_of(1, 2));
}

TEST_CASE("singleton union keeps the environment's supports") {
    Memdp m = fig3_model();
    Memdp u = union_mdp(m, EnvSet::single(0));
    for (StateId q = 0; q < m.num_states(); ++q)
        for (ActionId a : m.enabled[q])
            CHECK(u.dist(0, q, a).support() == m.dist(0, q, a).support());
}

TEST_CASE("restriction keeps only closed actions") {
    Memdp u = union_mdp(fig3_model(), fig3_model().all_envs());
    Memdp r = restrict_model(u, {u.state_id("q1"), u.state_id("q2")});
    REQUIRE(r.num_states() == 2);
    StateId q2 = r.state_id("q2");
    REQUIRE(r.enabled[q2].size() == 1);
    CHECK(r.action_names[r.enabled[q2][0]] == "c");

    // identity on the full state set
    std::vector<StateId> all;
    for (StateId q = 0; q < u.num_states(); ++q) all.push_back(q);
    Memdp same = restrict_model(u, all);
    CHECK(same.num_states() == u.num_states());

    REQUIRE_THROWS_AS(restrict_model(u, {u.state_id("q2")}), NotClosed);
}

TEST_CASE("restriction never leaks outside the kept set") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::RandomModelOptions opt;
        opt.envs = 2;
        Memdp m = testing::random_memdp(seed, opt);
        // restrict to the union-safety core of the whole state set (always closed)
        std::vector<StateId> keep;
        for (StateId q = 0; q < m.num_states(); ++q) keep.push_back(q);
        Memdp r = restrict_model(m, keep);
        for (EnvId e = 0; e < r.num_envs(); ++e)
            for (StateId q = 0; q < r.num_states(); ++q)
                for (ActionId a : r.enabled[q])
                    for (StateId t : r.dist(e, q, a).support()) CHECK(t < r.num_states());
    }
}

TEST_CASE("environment deduplication keeps one representative per support family") {
    // identical supports, different probabilities
    RawModel raw;
    raw.states = {"q", "r"};
    raw.actions = {"a"};
    raw.enabled = {{"q", {"a"}}, {"r", {"a"}}};
    raw.environments = {
        {"e1", {{"q", {{"a", {{"q", "1/3"}, {"r", "2/3"}}}}}, {"r", {{"a", {{"r", "1"}}}}}}},
        {"e2", {{"q", {{"a", {{"q", "1/2"}, {"r", "1/2"}}}}}, {"r", {{"a", {{"r", "1"}}}}}}}};
    raw.initial = "q";
    Memdp m = validate(raw);
    auto dd = dedup_environments(m);
    CHECK(dd.model.num_envs() == 1);
    CHECK(dd.representative == std::vector<EnvId>{0, 0});

    Memdp f3 = fig3_model();
    auto dd3 = dedup_environments(f3);
    CHECK(dd3.model.num_envs() == 2);
    CHECK(dd3.representative == std::vector<EnvId>{0, 1});

    // idempotent
    auto again = dedup_environments(dd.model);
    CHECK(again.model.num_envs() == dd.model.num_envs());
}

TEST_CASE("objective encodings") {
    Memdp m = fig3_model();
    StateId q3 = m.state_id("q3");
    Memdp r = encode_objective(m, Objective::reach({q3}));
    CHECK(r.priority[q3] == 0);
    for (StateId q = 0; q < r.num_states(); ++q)
        if (q != q3) CHECK(r.priority[q] == 1);
    CHECK(r.is_sink(q3));

    std::vector<StateId> all;
    for (StateId q = 0; q < m.num_states(); ++q) all.push_back(q);
    Memdp s = encode_objective(m, Objective::safe(all));
    for (StateId q = 0; q < s.num_states(); ++q) {
        CHECK(s.priority[q] == 0);
        CHECK(s.enabled[q] == m.enabled[q]);
    }

    // parity encoding is the identity, so re-encoding changes nothing
    Memdp rr = encode_objective(r, Objective::parity());
    CHECK(model_to_json(rr) == model_to_json(r));
}

TEST_CASE("json round trips every generated example") {
    for (const Memdp& m : {fig3_model(), fig4_model(), fig5_model(), missing_card(3),
                           duplicate_card(3), one_shot_model(), matching_pennies_model()}) {
        Json j = model_to_json(m);
        Memdp back = model_from_json(j);
        CHECK(model_to_json(back) == j);
    }
}

TEST_CASE("json parser rejects unknown keys") {
    Json j = model_to_json(one_shot_model());
    j["extra"] = 1;
    REQUIRE_THROWS_AS(model_from_json(j), MalformedModel);
}

TEST_CASE("every distribution in a validated model sums to one") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::RandomModelOptions opt;
        opt.envs = 3;
        Memdp m = testing::random_memdp(seed, opt);
        for (EnvId e = 0; e < m.num_envs(); ++e)
            for (StateId q = 0; q < m.num_states(); ++q)
                for (std::size_t k = 0; k < m.enabled[q].size(); ++k)
                    CHECK(m.dist_at(e, q, static_cast<int>(k)).total() == 1);
    }
}
