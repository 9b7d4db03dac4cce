#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>

#include "refsig/common/error.hpp"
#include "refsig/game/packet.hpp"

namespace refsig::game {

struct ConsensusPolicy {
    std::size_t quorum = 2;
    double window = 1.0;
    double gc_delay = 15.0;

    void validate(std::size_t n_robots) const {
        if (quorum < 1 || quorum > n_robots)
            throw ValidationError("consensus: quorum " + std::to_string(quorum) + " outside [1, " +
                                  std::to_string(n_robots) + "]");
        if (!(window >= 0.0)) throw ValidationError("consensus: window must be non-negative");
        if (!(gc_delay >= 0.0)) throw ValidationError("consensus: gc_delay must be non-negative");
    }
};

// True iff at least `quorum` distinct robots reported `kind` with a
// detection time in [now - window, now].
inline bool consensus_check(std::span<const DetectionPacket> packets, SignalKind kind, const ConsensusPolicy& policy,
                            double now) {
    std::set<std::uint8_t> robots;
    for (const auto& p : packets)
        if (p.kind == kind && p.detect_time >= now - policy.window && p.detect_time <= now) robots.insert(p.robot_id);
    return robots.size() >= policy.quorum;
}

// Either signal kind.
inline bool consensus_check(std::span<const DetectionPacket> packets, const ConsensusPolicy& policy, double now) {
    return consensus_check(packets, SignalKind::Gesture, policy, now) ||
           consensus_check(packets, SignalKind::Whistle, policy, now);
}

}  // namespace refsig::game
