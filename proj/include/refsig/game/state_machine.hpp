#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "refsig/common/error.hpp"

namespace refsig::game {

enum class GameState : int { Initial, Standby, Ready, Set, Playing, Finished };

inline constexpr std::array<GameState, 6> kGameStates = {GameState::Initial, GameState::Standby, GameState::Ready,
                                                         GameState::Set,     GameState::Playing, GameState::Finished};

inline std::string_view to_string(GameState s) {
    switch (s) {
        case GameState::Initial: return "Initial";
        case GameState::Standby: return "Standby";
        case GameState::Ready: return "Ready";
        case GameState::Set: return "Set";
        case GameState::Playing: return "Playing";
        case GameState::Finished: return "Finished";
    }
    return "?";
}

inline GameState parse_game_state(std::string_view name) {
    for (auto s : kGameStates)
        if (to_string(s) == name) return s;
    throw ParseError("unknown game state '" + std::string(name) + "'");
}

enum class TriggerKind : int { GestureQuorum, WhistleQuorum, GcMessage, Timer };

inline std::string_view to_string(TriggerKind k) {
    switch (k) {
        case TriggerKind::GestureQuorum: return "gesture_quorum";
        case TriggerKind::WhistleQuorum: return "whistle_quorum";
        case TriggerKind::GcMessage: return "gc";
        case TriggerKind::Timer: return "timer";
    }
    return "?";
}

inline TriggerKind parse_trigger_kind(std::string_view name) {
    for (auto k : {TriggerKind::GestureQuorum, TriggerKind::WhistleQuorum, TriggerKind::GcMessage, TriggerKind::Timer})
        if (to_string(k) == name) return k;
    throw ParseError("unknown trigger '" + std::string(name) + "'");
}

// A GameController message carries the state it commands.
struct Trigger {
    TriggerKind kind = TriggerKind::Timer;
    std::optional<GameState> target;

    static Trigger gesture() { return {TriggerKind::GestureQuorum, std::nullopt}; }
    static Trigger whistle() { return {TriggerKind::WhistleQuorum, std::nullopt}; }
    static Trigger timer() { return {TriggerKind::Timer, std::nullopt}; }
    static Trigger gc(GameState target) { return {TriggerKind::GcMessage, target}; }

    friend auto operator<=>(const Trigger&, const Trigger&) = default;
};

inline std::string to_string(const Trigger& t) {
    std::string s(to_string(t.kind));
    if (t.target) s += "(" + std::string(to_string(*t.target)) + ")";
    return s;
}

struct TransitionRule {
    GameState from = GameState::Initial;
    Trigger trigger;
    GameState to = GameState::Initial;
};

class RuleTable {
public:
    RuleTable() = default;

    explicit RuleTable(const std::vector<TransitionRule>& rules) {
        for (const auto& r : rules) add(r);
    }

    void add(const TransitionRule& r) {
        if (r.trigger.kind == TriggerKind::GcMessage && !r.trigger.target)
            throw ValidationError("rule table: gc rule from " + std::string(to_string(r.from)) + " lacks a target");
        if (r.trigger.kind != TriggerKind::GcMessage && r.trigger.target)
            throw ValidationError("rule table: only gc rules carry a target");
        if (!rules_.emplace(std::pair{r.from, r.trigger}, r.to).second)
            throw ValidationError("rule table: duplicate rule for (" + std::string(to_string(r.from)) + ", " +
                                  to_string(r.trigger) + ")");
        order_.push_back(r);
    }

    std::optional<GameState> lookup(GameState from, const Trigger& t) const {
        auto it = rules_.find({from, t});
        if (it == rules_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<TransitionRule>& rules() const { return order_; }

private:
    std::map<std::pair<GameState, Trigger>, GameState> rules_;
    std::vector<TransitionRule> order_;
};

// Referee signals drive Standby->Ready (gesture), Set->Playing (kick-off
// whistle) and Playing->Ready (goal whistle). Ready->Set is the placement
// timer. Every step also has a GameController message path.
inline RuleTable default_rules() {
    using S = GameState;
    using T = Trigger;
    return RuleTable({
        {S::Initial, T::gc(S::Standby), S::Standby},
        {S::Standby, T::gesture(), S::Ready},
        {S::Standby, T::gc(S::Ready), S::Ready},
        {S::Ready, T::timer(), S::Set},
        {S::Ready, T::gc(S::Set), S::Set},
        {S::Set, T::whistle(), S::Playing},
        {S::Set, T::gc(S::Playing), S::Playing},
        {S::Playing, T::whistle(), S::Ready},
        {S::Playing, T::gc(S::Ready), S::Ready},
        {S::Playing, T::gc(S::Finished), S::Finished},
    });
}

// The matching rule's target, or `state` unchanged when no rule matches.
inline GameState apply_event(GameState state, const Trigger& trigger, const RuleTable& rules) {
    return rules.lookup(state, trigger).value_or(state);
}

inline std::set<GameState> reachable_states(const RuleTable& rules, GameState from = GameState::Initial) {
    std::set<GameState> seen{from};
    std::queue<GameState> frontier;
    frontier.push(from);
    while (!frontier.empty()) {
        const auto s = frontier.front();
        frontier.pop();
        for (const auto& r : rules.rules())
            if (r.from == s && seen.insert(r.to).second) frontier.push(r.to);
    }
    return seen;
}

// {"rules": [{"from": "Standby", "trigger": "gesture_quorum", "to": "Ready"},
//            {"from": "Initial", "trigger": "gc", "target": "Standby", "to": "Standby"}, ...]}
inline nlohmann::json rules_to_json(const RuleTable& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : table.rules()) {
        nlohmann::json j = {{"from", to_string(r.from)}, {"trigger", to_string(r.trigger.kind)}, {"to", to_string(r.to)}};
        if (r.trigger.target) j["target"] = to_string(*r.trigger.target);
        arr.push_back(j);
    }
    return {{"rules", arr}};
}

inline RuleTable rules_from_json(const nlohmann::json& j) {
    try {
        RuleTable table;
        for (const auto& r : j.at("rules")) {
            Trigger t{parse_trigger_kind(r.at("trigger").get<std::string>()), std::nullopt};
            if (r.contains("target")) t.target = parse_game_state(r.at("target").get<std::string>());
            table.add({parse_game_state(r.at("from").get<std::string>()), t,
                       parse_game_state(r.at("to").get<std::string>())});
        }
        return table;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("rule table: ") + e.what());
    }
}

inline RuleTable load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return rules_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace refsig::game
