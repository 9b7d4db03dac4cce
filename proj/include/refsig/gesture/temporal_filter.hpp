#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "refsig/common/error.hpp"

namespace refsig::gesture {

struct TemporalFilterState {
    std::size_t required_run = 4;
    std::size_t current_run = 0;
    std::optional<std::int64_t> last_frame_index;
};

struct FilterStep {
    TemporalFilterState state;
    bool fired = false;
};

// Counts consecutive positive frames. A negative frame or a gap in frame
// indices resets the run. Fires once, on the frame where the run reaches
// `required_run`.
inline FilterStep temporal_filter_step(TemporalFilterState state, std::int64_t frame_index, bool positive) {
    if (state.last_frame_index && frame_index <= *state.last_frame_index)
        throw SequencingError("temporal filter: frame " + std::to_string(frame_index) + " does not follow frame " +
                              std::to_string(*state.last_frame_index));
    const bool contiguous = !state.last_frame_index || frame_index == *state.last_frame_index + 1;
    if (!contiguous) state.current_run = 0;
    state.last_frame_index = frame_index;
    if (!positive) {
        state.current_run = 0;
        return {state, false};
    }
    ++state.current_run;
    return {state, state.current_run == state.required_run};
}

// Single-owner stateful wrapper for one camera stream.
class TemporalFilter {
public:
    explicit TemporalFilter(std::size_t required_run = 4) { state_.required_run = required_run; }

    bool step(std::int64_t frame_index, bool positive) {
        auto r = temporal_filter_step(state_, frame_index, positive);
        state_ = r.state;
        return r.fired;
    }

    const TemporalFilterState& state() const { return state_; }

private:
    TemporalFilterState state_;
};

}  // namespace refsig::gesture
