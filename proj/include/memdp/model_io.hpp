#ifndef MEMDP_MODEL_IO_HPP
#define MEMDP_MODEL_IO_HPP

#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "memdp/model.hpp"

namespace memdp {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON model format:
// {
//   "states": [...], "actions": [...],
//   "enabled": {state: [action, ...]},
//   "environments": {env: {state: {action: {state: "num/den", ...}}}},
//   "priority": {state: int},
//   "initial": state
// }
// Probabilities are strings parsed as exact fractions ("1/3") or integers;
// bare JSON integers are accepted too. Unknown keys are rejected.
// ---------------------------------------------------------------------------
inline RawModel raw_model_from_json(const Json& j) {
    if (!j.is_object()) throw MalformedModel("model document must be a JSON object");
    static const std::set<std::string> known = {"states",       "actions", "enabled",
                                                "environments", "priority", "initial"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw MalformedModel("unknown key in model document: " + key);
    for (const char* key : {"states", "actions", "enabled", "environments", "initial"})
        if (!j.contains(key)) throw MalformedModel(std::string("missing key: ") + key);

    RawModel raw;
    for (const auto& s : j.at("states")) raw.states.push_back(s.get<std::string>());
    for (const auto& a : j.at("actions")) raw.actions.push_back(a.get<std::string>());
    for (const auto& [state, acts] : j.at("enabled").items()) {
        std::vector<std::string> list;
        for (const auto& a : acts) list.push_back(a.get<std::string>());
        raw.enabled.emplace_back(state, std::move(list));
    }
    for (const auto& [env, rows] : j.at("environments").items()) {
        RawModel::RawEnvRow env_row;
        for (const auto& [state, arow] : rows.items()) {
            RawModel::RawStateRow state_row;
            for (const auto& [action, dist] : arow.items()) {
                RawModel::RawDist d;
                for (const auto& [target, prob] : dist.items()) {
                    std::string text = prob.is_string()
                                           ? prob.get<std::string>()
                                           : Json(prob).dump();
                    d.emplace_back(target, text);
                }
                state_row.emplace_back(action, std::move(d));
            }
            env_row.emplace_back(state, std::move(state_row));
        }
        raw.environments.emplace_back(env, std::move(env_row));
    }
    if (j.contains("priority")) {
        raw.has_priority = true;
        for (const auto& [state, p] : j.at("priority").items()) {
            if (!p.is_number_integer() || p.get<long>() < 0)
                throw MalformedModel("priority must be a nonnegative integer for " + state);
            raw.priority.emplace_back(state, p.get<int>());
        }
    }
    raw.initial = j.at("initial").get<std::string>();
    return raw;
}

inline Memdp model_from_json(const Json& j) { return validate(raw_model_from_json(j)); }

inline Memdp model_from_json_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedModel(std::string("JSON parse error: ") + e.what());
    }
    return model_from_json(j);
}

inline Json model_to_json(const Memdp& m) {
    Json j;
    j["states"] = m.state_names;
    j["actions"] = m.action_names;
    Json enabled = Json::object();
    for (StateId q = 0; q < m.num_states(); ++q) {
        Json acts = Json::array();
        for (ActionId a : m.enabled[q]) acts.push_back(m.action_names[a]);
        enabled[m.state_names[q]] = acts;
    }
    j["enabled"] = enabled;
    Json envs = Json::object();
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        Json rows = Json::object();
        for (StateId q = 0; q < m.num_states(); ++q) {
            Json arow = Json::object();
            for (ActionId a : m.enabled[q]) {
                Json dist = Json::object();
                for (const auto& [t, p] : m.dist(e, q, a).entries)
                    dist[m.state_names[t]] = rational_to_string(p);
                arow[m.action_names[a]] = dist;
            }
            rows[m.state_names[q]] = arow;
        }
        envs[m.env_names[e]] = rows;
    }
    j["environments"] = envs;
    Json prio = Json::object();
    for (StateId q = 0; q < m.num_states(); ++q) prio[m.state_names[q]] = m.priority[q];
    j["priority"] = prio;
    j["initial"] = m.state_names[m.initial];
    return j;
}

// ---------------------------------------------------------------------------
// DOT rendering: one cluster per environment, revealing transitions in red,
// optional highlighted region (doubled border).
// ---------------------------------------------------------------------------
inline void write_dot(std::ostream& os, const Memdp& m,
                      const std::vector<StateId>& highlight = {}) {
    auto highlighted = [&](StateId q) {
        return std::binary_search(highlight.begin(), highlight.end(), q);
    };
    EnvSet all = m.all_envs();
    os << "digraph memdp {\n  rankdir=LR;\n";
    for (EnvId e = 0; e < m.num_envs(); ++e) {
        os << "  subgraph cluster_" << e << " {\n";
        os << "    label=\"" << m.env_names[e] << "\";\n";
        for (StateId q = 0; q < m.num_states(); ++q) {
            os << "    \"" << e << ":" << m.state_names[q] << "\" [label=\"" << m.state_names[q]
               << " (" << m.priority[q] << ")\"";
            if (highlighted(q)) os << " peripheries=2";
            if (q == m.initial) os << " style=bold";
            os << "];\n";
        }
        for (StateId q = 0; q < m.num_states(); ++q)
            for (ActionId a : m.enabled[q])
                for (const auto& [t, p] : m.dist(e, q, a).entries) {
                    bool revealing = m.knowledge_after(all, q, a, t).strict_subset_of(all);
                    os << "    \"" << e << ":" << m.state_names[q] << "\" -> \"" << e << ":"
                       << m.state_names[t] << "\" [label=\"" << m.action_names[a] << ":"
                       << rational_to_string(p) << "\"";
                    if (revealing) os << " color=red";
                    os << "];\n";
                }
        os << "  }\n";
    }
    os << "}\n";
}

}  // namespace memdp

#endif
