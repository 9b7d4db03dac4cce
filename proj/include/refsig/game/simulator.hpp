#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/game/consensus.hpp"
#include "refsig/game/packet.hpp"
#include "refsig/game/state_machine.hpp"

namespace refsig::game {

struct NetworkConfig {
    std::size_t n_robots = 3;
    double min_latency = 0.005;
    double max_latency = 0.050;
    double drop_prob = 0.05;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_robots == 0 || n_robots > 256) throw ValidationError("network: n_robots must be in [1, 256]");
        if (!(min_latency >= 0.0 && min_latency <= max_latency))
            throw ValidationError("network: latency range must satisfy 0 <= min <= max");
        if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw ValidationError("network: drop_prob must be in [0, 1)");
    }
};

enum class ScenarioKind { Gesture, Whistle, Timeout, Gc };

// One scripted referee-side event. Gesture and whistle events list the robots
// that confirm the signal locally; gc events name the commanded state.
struct ScenarioEvent {
    double t = 0.0;
    ScenarioKind kind = ScenarioKind::Gesture;
    std::vector<std::size_t> detected_by;
    std::optional<GameState> target;
};

struct Scenario {
    GameState initial = GameState::Standby;
    std::vector<ScenarioEvent> events;
};

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Gesture: return "gesture";
        case ScenarioKind::Whistle: return "whistle";
        case ScenarioKind::Timeout: return "timeout";
        case ScenarioKind::Gc: return "gc";
    }
    return "?";
}

// JSON Lines: {"t": 10.0, "kind": "gesture", "detected_by": [0,1,2]}
//             {"t": 40.0, "kind": "timeout"}
//             {"t": 90.0, "kind": "gc", "target": "Finished"}
inline Scenario read_scenario(std::istream& in, GameState initial = GameState::Standby) {
    Scenario sc;
    sc.initial = initial;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "scenario line " + std::to_string(line_no) + ": ";
        try {
            const auto j = nlohmann::json::parse(line);
            ScenarioEvent ev;
            ev.t = j.at("t").get<double>();
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "gesture") ev.kind = ScenarioKind::Gesture;
            else if (kind == "whistle") ev.kind = ScenarioKind::Whistle;
            else if (kind == "timeout") ev.kind = ScenarioKind::Timeout;
            else if (kind == "gc") ev.kind = ScenarioKind::Gc;
            else throw ParseError(where + "unknown kind '" + kind + "'");
            if (j.contains("detected_by")) ev.detected_by = j.at("detected_by").get<std::vector<std::size_t>>();
            if (ev.kind == ScenarioKind::Gc) {
                if (!j.contains("target")) throw ParseError(where + "gc event needs a target");
                ev.target = parse_game_state(j.at("target").get<std::string>());
            }
            sc.events.push_back(std::move(ev));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + e.what());
        }
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path, GameState initial = GameState::Standby) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_scenario(in, initial);
}

inline void write_scenario(std::ostream& out, const Scenario& sc) {
    for (const auto& ev : sc.events) {
        nlohmann::json j = {{"t", ev.t}, {"kind", to_string(ev.kind)}};
        if (!ev.detected_by.empty()) j["detected_by"] = ev.detected_by;
        if (ev.target) j["target"] = to_string(*ev.target);
        out << j.dump() << '\n';
    }
}

enum class TransitionPath { Fast, Fallback, Gc, Timer };

inline std::string_view to_string(TransitionPath p) {
    switch (p) {
        case TransitionPath::Fast: return "fast";
        case TransitionPath::Fallback: return "fallback";
        case TransitionPath::Gc: return "gc";
        case TransitionPath::Timer: return "timer";
    }
    return "?";
}

struct TraceEntry {
    std::size_t robot = 0;
    double time = 0.0;
    GameState from = GameState::Initial;
    GameState to = GameState::Initial;
    TransitionPath path = TransitionPath::Fast;
    // Delivery time of the GameController fallback this transition raced
    // against, when one was pending.
    std::optional<double> fallback_time;
};

struct SimulationStats {
    std::size_t packets_sent = 0;
    std::size_t packets_dropped = 0;
    std::size_t deliveries = 0;
};

struct Trace {
    std::size_t n_robots = 0;
    GameState initial = GameState::Standby;
    std::vector<TraceEntry> entries;
    std::vector<GameState> final_states;
    SimulationStats stats;
};

namespace detail {

struct Deliver {
    std::size_t receiver;
    DetectionPacket packet;
};
struct Broadcast {
    std::size_t sender;
    SignalKind kind;
};
struct GcDelivery {
    GameState target;
    TransitionPath path;
};
struct TimerFire {};

using Payload = std::variant<Deliver, Broadcast, GcDelivery, TimerFire>;

struct QueuedEvent {
    double time;
    std::uint64_t seq;
    Payload payload;

    bool operator>(const QueuedEvent& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

inline Trigger quorum_trigger(SignalKind k) {
    return k == SignalKind::Gesture ? Trigger::gesture() : Trigger::whistle();
}

}  // namespace detail

// Deterministic discrete-event simulation of N robots reacting to referee
// signals. Each confirming robot broadcasts a DetectionPacket; every robot
// (including the sender, via zero-latency loopback) runs consensus over the
// packets it has received and transitions on quorum. The GameController
// message for the same transition arrives gc_delay after the referee signal
// as the fallback path.
inline Trace simulate(const Scenario& scenario, const NetworkConfig& net, const ConsensusPolicy& policy,
                      const RuleTable& rules = default_rules()) {
    net.validate();
    policy.validate(net.n_robots);
    for (std::size_t i = 0; i < scenario.events.size(); ++i) {
        const auto& ev = scenario.events[i];
        if (!(ev.t >= 0.0) || !std::isfinite(ev.t))
            throw ValidationError("scenario event " + std::to_string(i) + ": time must be finite and >= 0");
        if (i > 0 && ev.t < scenario.events[i - 1].t)
            throw ValidationError("scenario event " + std::to_string(i) + ": events are not time-ordered");
        for (auto r : ev.detected_by)
            if (r >= net.n_robots)
                throw ValidationError("scenario event " + std::to_string(i) + ": robot " + std::to_string(r) +
                                      " does not exist");
        if (ev.kind == ScenarioKind::Gc && !ev.target)
            throw ValidationError("scenario event " + std::to_string(i) + ": gc event needs a target");
    }

    const std::size_t n = net.n_robots;
    Rng rng(net.seed);
    std::priority_queue<detail::QueuedEvent, std::vector<detail::QueuedEvent>, std::greater<>> queue;
    std::uint64_t seq = 0;
    auto push = [&](double t, detail::Payload p) { queue.push({t, seq++, std::move(p)}); };

    // The referee's own view of the game decides which GameController
    // message follows each signal.
    GameState truth = scenario.initial;
    for (const auto& ev : scenario.events) {
        switch (ev.kind) {
            case ScenarioKind::Gesture:
            case ScenarioKind::Whistle: {
                const auto kind = ev.kind == ScenarioKind::Gesture ? SignalKind::Gesture : SignalKind::Whistle;
                for (auto r : ev.detected_by) push(ev.t, detail::Broadcast{r, kind});
                const auto next = rules.lookup(truth, detail::quorum_trigger(kind));
                if (next) {
                    truth = *next;
                    push(ev.t + policy.gc_delay, detail::GcDelivery{truth, TransitionPath::Fallback});
                }
                break;
            }
            case ScenarioKind::Timeout:
                truth = apply_event(truth, Trigger::timer(), rules);
                push(ev.t, detail::TimerFire{});
                break;
            case ScenarioKind::Gc:
                truth = apply_event(truth, Trigger::gc(*ev.target), rules);
                push(ev.t, detail::GcDelivery{*ev.target, TransitionPath::Gc});
                break;
        }
    }

    // Pending fallback deliveries per target, for margin bookkeeping.
    std::multimap<GameState, double> pending_fallback;
    {
        auto copy = queue;
        while (!copy.empty()) {
            const auto& e = copy.top();
            if (const auto* g = std::get_if<detail::GcDelivery>(&e.payload); g && g->path == TransitionPath::Fallback)
                pending_fallback.emplace(g->target, e.time);
            copy.pop();
        }
    }
    auto fallback_for = [&](GameState target, double now) -> std::optional<double> {
        std::optional<double> best;
        auto [lo, hi] = pending_fallback.equal_range(target);
        for (auto it = lo; it != hi; ++it)
            if (it->second >= now && (!best || it->second < *best)) best = it->second;
        return best;
    };

    struct Robot {
        GameState state;
        std::vector<DetectionPacket> inbox;
        std::array<double, 2> consumed_until{-std::numeric_limits<double>::infinity(),
                                             -std::numeric_limits<double>::infinity()};
        std::uint16_t sequence = 0;
    };
    std::vector<Robot> robots(n, Robot{scenario.initial, {}, {}, 0});
    for (auto& r : robots) r.consumed_until.fill(-std::numeric_limits<double>::infinity());

    Trace trace;
    trace.n_robots = n;
    trace.initial = scenario.initial;

    auto transition = [&](std::size_t id, double now, const Trigger& trig, TransitionPath path) -> bool {
        auto& r = robots[id];
        const auto next = rules.lookup(r.state, trig);
        if (!next) return false;
        TraceEntry e{id, now, r.state, *next, path, std::nullopt};
        if (path == TransitionPath::Fallback) e.fallback_time = now;
        else e.fallback_time = fallback_for(*next, now);
        r.state = *next;
        trace.entries.push_back(e);
        return true;
    };

    while (!queue.empty()) {
        const auto ev = queue.top();
        queue.pop();
        const double now = ev.time;
        if (const auto* b = std::get_if<detail::Broadcast>(&ev.payload)) {
            auto& sender = robots[b->sender];
            const DetectionPacket pkt{static_cast<std::uint8_t>(b->sender), b->kind, sender.sequence++, now};
            ++trace.stats.packets_sent;
            for (std::size_t rcv = 0; rcv < n; ++rcv) {
                if (rcv == b->sender) {
                    push(now, detail::Deliver{rcv, pkt});
                    continue;
                }
                if (rng.bernoulli(net.drop_prob)) {
                    ++trace.stats.packets_dropped;
                    continue;
                }
                push(now + rng.uniform(net.min_latency, net.max_latency), detail::Deliver{rcv, pkt});
            }
        } else if (const auto* d = std::get_if<detail::Deliver>(&ev.payload)) {
            ++trace.stats.deliveries;
            auto& r = robots[d->receiver];
            const auto k = static_cast<std::size_t>(d->packet.kind);
            if (d->packet.detect_time <= r.consumed_until[k]) continue;
            r.inbox.push_back(d->packet);
            std::vector<DetectionPacket> live;
            for (const auto& p : r.inbox)
                if (p.kind == d->packet.kind && p.detect_time > r.consumed_until[k]) live.push_back(p);
            if (consensus_check(live, d->packet.kind, policy, now) &&
                transition(d->receiver, now, detail::quorum_trigger(d->packet.kind), TransitionPath::Fast))
                r.consumed_until[k] = now;
        } else if (const auto* g = std::get_if<detail::GcDelivery>(&ev.payload)) {
            for (std::size_t id = 0; id < n; ++id) transition(id, now, Trigger::gc(g->target), g->path);
        } else {
            for (std::size_t id = 0; id < n; ++id) transition(id, now, Trigger::timer(), TransitionPath::Timer);
        }
    }
    for (const auto& r : robots) trace.final_states.push_back(r.state);
    return trace;
}

inline nlohmann::json to_json(const TraceEntry& e) {
    nlohmann::json j = {{"robot", e.robot},       {"t", e.time},           {"from", to_string(e.from)},
                        {"to", to_string(e.to)}, {"path", to_string(e.path)}};
    j["fallback_t"] = e.fallback_time ? nlohmann::json(*e.fallback_time) : nlohmann::json(nullptr);
    return j;
}

// One JSON object per (robot, transition).
inline void write_trace(std::ostream& out, const Trace& trace) {
    for (const auto& e : trace.entries) out << to_json(e).dump() << '\n';
}

inline std::string trace_jsonl(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

// Every state a robot occupied is reachable from Initial through the rules.
inline bool trace_is_safe(const Trace& trace, const RuleTable& rules) {
    const auto ok = reachable_states(rules);
    if (!ok.count(trace.initial)) return false;
    for (const auto& e : trace.entries)
        if (!ok.count(e.from) || !ok.count(e.to)) return false;
    return true;
}

struct TransitionStats {
    GameState from = GameState::Initial;
    GameState to = GameState::Initial;
    std::size_t count = 0;
    std::size_t fast_wins = 0;
    // Mean of (fallback delivery - fast transition) over fast wins that had a
    // pending fallback; empty when there were none.
    std::optional<double> mean_margin;
};

struct LatencyReport {
    std::vector<TransitionStats> rows;
    std::size_t transitions = 0;
    std::size_t fast_wins = 0;
    std::optional<double> mean_margin;
};

inline LatencyReport latency_report(const Trace& trace) {
    LatencyReport rep;
    std::map<std::pair<GameState, GameState>, std::pair<TransitionStats, std::vector<double>>> acc;
    std::vector<double> all;
    for (const auto& e : trace.entries) {
        auto& [st, margins] = acc[{e.from, e.to}];
        st.from = e.from;
        st.to = e.to;
        ++st.count;
        ++rep.transitions;
        if (e.path == TransitionPath::Fast) {
            ++st.fast_wins;
            ++rep.fast_wins;
            if (e.fallback_time) {
                margins.push_back(*e.fallback_time - e.time);
                all.push_back(*e.fallback_time - e.time);
            }
        }
    }
    auto mean = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    for (auto& [key, val] : acc) {
        val.first.mean_margin = mean(val.second);
        rep.rows.push_back(val.first);
    }
    rep.mean_margin = mean(all);
    return rep;
}

inline void render_latency_report(std::ostream& os, const LatencyReport& rep) {
    auto margin = [](const std::optional<double>& m) {
        if (!m) return std::string("n/a");
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << *m;
        return s.str();
    };
    os << std::left << std::setw(22) << "transition" << std::right << std::setw(8) << "count" << std::setw(11)
       << "fast wins" << std::setw(14) << "margin (s)" << '\n';
    for (const auto& r : rep.rows) {
        const std::string name = std::string(to_string(r.from)) + " -> " + std::string(to_string(r.to));
        os << std::left << std::setw(22) << name << std::right << std::setw(8) << r.count << std::setw(11)
           << r.fast_wins << std::setw(14) << margin(r.mean_margin) << '\n';
    }
    os << std::left << std::setw(22) << "total" << std::right << std::setw(8) << rep.transitions << std::setw(11)
       << rep.fast_wins << std::setw(14) << margin(rep.mean_margin) << '\n';
}

}  // namespace refsig::game
