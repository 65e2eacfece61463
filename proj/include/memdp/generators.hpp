#ifndef MEMDP_GENERATORS_HPP
#define MEMDP_GENERATORS_HPP

#include <string>
#include <vector>

#include "memdp/model.hpp"

namespace memdp {

// Builders for the bundled example families. All of them produce validated
// models, so the CLI can serialize them directly.

namespace detail {

inline RawModel card_game_skeleton(int n) {
    RawModel raw;
    raw.states.push_back("0");  // hub
    for (int i = 1; i <= n; ++i) raw.states.push_back(std::to_string(i));
    raw.states.push_back("win");
    raw.states.push_back("lose");
    raw.actions = {"sample", "back", "stay"};
    for (int i = 1; i <= n; ++i) raw.actions.push_back("guess" + std::to_string(i));

    std::vector<std::string> hub_actions = {"sample"};
    for (int i = 1; i <= n; ++i) hub_actions.push_back("guess" + std::to_string(i));
    raw.enabled.emplace_back("0", hub_actions);
    for (int i = 1; i <= n; ++i)
        raw.enabled.emplace_back(std::to_string(i), std::vector<std::string>{"back"});
    raw.enabled.emplace_back("win", std::vector<std::string>{"stay"});
    raw.enabled.emplace_back("lose", std::vector<std::string>{"stay"});

    raw.has_priority = true;
    raw.priority.emplace_back("win", 0);
    raw.priority.emplace_back("0", 1);
    for (int i = 1; i <= n; ++i) raw.priority.emplace_back(std::to_string(i), 1);
    raw.priority.emplace_back("lose", 1);
    raw.initial = "0";
    return raw;
}

inline void card_game_common_rows(RawModel::RawStateRow& hub_row, RawModel& raw, int n, int env) {
    for (int x = 1; x <= n; ++x) {
        RawModel::RawDist d{{x == env ? "win" : "lose", "1"}};
        hub_row.emplace_back("guess" + std::to_string(x), std::move(d));
    }
    RawModel::RawEnvRow& rows = raw.environments.back().second;
    for (int i = 1; i <= n; ++i) {
        RawModel::RawStateRow row{{"back", {{"0", "1"}}}};
        rows.emplace_back(std::to_string(i), std::move(row));
    }
    rows.emplace_back("win", RawModel::RawStateRow{{"stay", {{"win", "1"}}}});
    rows.emplace_back("lose", RawModel::RawStateRow{{"stay", {{"lose", "1"}}}});
}

}  // namespace detail

// n-card deck with one card removed; environment e_i means card i is missing.
// Sampling reveals a uniformly random present card; a correct guess of the
// missing card wins.
inline Memdp missing_card(int n) {
    if (n < 2) throw MalformedModel("card families need at least 2 cards");
    RawModel raw = detail::card_game_skeleton(n);
    for (int env = 1; env <= n; ++env) {
        raw.environments.emplace_back("e" + std::to_string(env), RawModel::RawEnvRow{});
        RawModel::RawStateRow hub_row;
        RawModel::RawDist sample;
        for (int x = 1; x <= n; ++x)
            if (x != env)
                sample.emplace_back(std::to_string(x), "1/" + std::to_string(n - 1));
        hub_row.emplace_back("sample", std::move(sample));
        detail::card_game_common_rows(hub_row, raw, n, env);
        raw.environments.back().second.insert(raw.environments.back().second.begin(),
                                              {"0", std::move(hub_row)});
    }
    return validate(raw);
}

// n+1-card deck where one of n distinct cards is duplicated; environment e_i
// means card i appears twice, so sampling shows it with probability 2/(n+1).
inline Memdp duplicate_card(int n) {
    if (n < 2) throw MalformedModel("card families need at least 2 cards");
    RawModel raw = detail::card_game_skeleton(n);
    for (int env = 1; env <= n; ++env) {
        raw.environments.emplace_back("e" + std::to_string(env), RawModel::RawEnvRow{});
        RawModel::RawStateRow hub_row;
        RawModel::RawDist sample;
        for (int x = 1; x <= n; ++x)
            sample.emplace_back(std::to_string(x), (x == env ? "2/" : "1/") + std::to_string(n + 1));
        hub_row.emplace_back("sample", std::move(sample));
        detail::card_game_common_rows(hub_row, raw, n, env);
        raw.environments.back().second.insert(raw.environments.back().second.begin(),
                                              {"0", std::move(hub_row)});
    }
    return validate(raw);
}

// Two environments, one end-component {q1,q2} whose transition probabilities
// differ between them; the only way to win is to learn the environment by
// sampling the q1 loop.
inline Memdp fig3_model() {
    RawModel raw;
    raw.states = {"q1", "q2", "q3", "q4"};
    raw.actions = {"a", "b", "c"};
    raw.enabled = {
        {"q1", {"c"}}, {"q2", {"a", "b", "c"}}, {"q3", {"a"}}, {"q4", {"a"}}};
    raw.environments = {
        {"e1",
         {{"q1", {{"c", {{"q1", "2/3"}, {"q2", "1/3"}}}}},
          {"q2", {{"a", {{"q3", "1"}}}, {"b", {{"q4", "1"}}}, {"c", {{"q1", "1"}}}}},
          {"q3", {{"a", {{"q3", "1"}}}}},
          {"q4", {{"a", {{"q4", "1"}}}}}}},
        {"e2",
         {{"q1", {{"c", {{"q1", "1/3"}, {"q2", "2/3"}}}}},
          {"q2", {{"a", {{"q4", "1"}}}, {"b", {{"q3", "1"}}}, {"c", {{"q1", "1"}}}}},
          {"q3", {{"a", {{"q3", "1"}}}}},
          {"q4", {{"a", {{"q4", "1"}}}}}}}};
    raw.has_priority = true;
    raw.priority = {{"q1", 1}, {"q2", 1}, {"q3", 0}, {"q4", 1}};
    raw.initial = "q1";
    return validate(raw);
}

// Two environments; {q1,q2} is an end-component only in e2. Playing a long
// enough either reveals e1 (via q5) or justifies switching to the strategy
// that wins in e2.
inline Memdp fig4_model() {
    RawModel raw;
    raw.states = {"q1", "q2", "q3", "q4", "q5", "q6"};
    raw.actions = {"a", "b"};
    raw.enabled = {{"q1", {"a"}}, {"q2", {"a", "b"}}, {"q3", {"a"}},
                   {"q4", {"a"}}, {"q5", {"a"}},      {"q6", {"a"}}};
    raw.environments = {
        {"e1",
         {{"q1", {{"a", {{"q2", "1"}}}}},
          {"q2", {{"a", {{"q1", "1/2"}, {"q5", "1/2"}}}, {"b", {{"q3", "1"}}}}},
          {"q3", {{"a", {{"q4", "1"}}}}},
          {"q4", {{"a", {{"q3", "1/2"}, {"q6", "1/2"}}}}},
          {"q5", {{"a", {{"q5", "1"}}}}},
          {"q6", {{"a", {{"q6", "1"}}}}}}},
        {"e2",
         {{"q1", {{"a", {{"q2", "1"}}}}},
          {"q2", {{"a", {{"q1", "1"}}}, {"b", {{"q3", "1"}}}}},
          {"q3", {{"a", {{"q4", "1"}}}}},
          {"q4", {{"a", {{"q3", "1"}}}}},
          {"q5", {{"a", {{"q5", "1"}}}}},
          {"q6", {{"a", {{"q6", "1"}}}}}}}};
    raw.has_priority = true;
    raw.priority = {{"q1", 1}, {"q2", 1}, {"q3", 0}, {"q4", 0}, {"q5", 0}, {"q6", 1}};
    raw.initial = "q1";
    return validate(raw);
}

// Two environments with two non-distinguishing maximal common end-components:
// a winning one on {q3,q4} and a losing one on {q5,q6}; (q2,b) is an
// end-component in e2 only. Uniform probabilities.
inline Memdp fig5_model() {
    RawModel raw;
    raw.states = {"q1", "q2", "q3", "q4", "q5", "q6"};
    raw.actions = {"a", "b"};
    raw.enabled = {{"q1", {"a"}}, {"q2", {"a", "b"}}, {"q3", {"a"}},
                   {"q4", {"a", "b"}}, {"q5", {"a"}}, {"q6", {"a"}}};
    raw.environments = {
        {"e1",
         {{"q1", {{"a", {{"q2", "1/2"}, {"q3", "1/2"}}}}},
          {"q2", {{"a", {{"q1", "1/2"}, {"q2", "1/2"}}}, {"b", {{"q2", "1/2"}, {"q3", "1/2"}}}}},
          {"q3", {{"a", {{"q3", "1/2"}, {"q4", "1/2"}}}}},
          {"q4",
           {{"a", {{"q3", "1/2"}, {"q4", "1/2"}}},
            {"b", {{"q4", "1/3"}, {"q5", "1/3"}, {"q6", "1/3"}}}}},
          {"q5", {{"a", {{"q5", "1/2"}, {"q6", "1/2"}}}}},
          {"q6", {{"a", {{"q5", "1/2"}, {"q6", "1/2"}}}}}}},
        {"e2",
         {{"q1", {{"a", {{"q2", "1/2"}, {"q3", "1/2"}}}}},
          {"q2", {{"a", {{"q1", "1/2"}, {"q2", "1/2"}}}, {"b", {{"q2", "1"}}}}},
          {"q3", {{"a", {{"q3", "1/2"}, {"q4", "1/2"}}}}},
          {"q4", {{"a", {{"q3", "1/2"}, {"q4", "1/2"}}}, {"b", {{"q5", "1/2"}, {"q6", "1/2"}}}}},
          {"q5", {{"a", {{"q5", "1/2"}, {"q6", "1/2"}}}}},
          {"q6", {{"a", {{"q5", "1/2"}, {"q6", "1/2"}}}}}}}};
    raw.has_priority = true;
    raw.priority = {{"q1", 1}, {"q2", 1}, {"q3", 0}, {"q4", 0}, {"q5", 1}, {"q6", 1}};
    raw.initial = "q1";
    return validate(raw);
}

// One action, one shot: win with probability 3/5 in the single environment.
inline Memdp one_shot_model() {
    RawModel raw;
    raw.states = {"s", "win", "lose"};
    raw.actions = {"go", "stay"};
    raw.enabled = {{"s", {"go"}}, {"win", {"stay"}}, {"lose", {"stay"}}};
    raw.environments = {{"e1",
                         {{"s", {{"go", {{"win", "3/5"}, {"lose", "2/5"}}}}},
                          {"win", {{"stay", {{"win", "1"}}}}},
                          {"lose", {{"stay", {{"lose", "1"}}}}}}}};
    raw.has_priority = true;
    raw.priority = {{"s", 1}, {"win", 0}, {"lose", 1}};
    raw.initial = "s";
    return validate(raw);
}

// Two environments; action a wins only in e1, action b only in e2. Every pure
// strategy has worst-case value 0; mixing achieves 1/2.
inline Memdp matching_pennies_model() {
    RawModel raw;
    raw.states = {"s", "win", "lose"};
    raw.actions = {"a", "b", "stay"};
    raw.enabled = {{"s", {"a", "b"}}, {"win", {"stay"}}, {"lose", {"stay"}}};
    auto env = [&](const std::string& name, const char* awin, const char* bwin) {
        raw.environments.emplace_back(
            name, RawModel::RawEnvRow{{"s", {{"a", {{awin, "1"}}}, {"b", {{bwin, "1"}}}}},
                                      {"win", {{"stay", {{"win", "1"}}}}},
                                      {"lose", {{"stay", {{"lose", "1"}}}}}});
    };
    env("e1", "win", "lose");
    env("e2", "lose", "win");
    raw.has_priority = true;
    raw.priority = {{"s", 1}, {"win", 0}, {"lose", 1}};
    raw.initial = "s";
    return validate(raw);
}

}  // namespace memdp

#endif
