#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "refsig/audio/stft.hpp"
#include "refsig/whistle/train.hpp"

namespace refsig::whistle {

struct WhistleEvent {
    double start = 0.0;
    double end = 0.0;
    double peak_confidence = 0.0;
};

struct DetectConfig {
    double threshold = 0.5;
    std::size_t min_run = 3;
    double merge_gap = 0.1;
};

// Turns per-window whistle probabilities into events. Window k stands for
// the hop-wide cell centered on its center time; a maximal run of at least
// `min_run` positive windows becomes one event spanning its cells, and
// events closer than `merge_gap` are merged.
inline std::vector<WhistleEvent> extract_events(std::span<const double> probs, double first_center, double hop_seconds,
                                                const DetectConfig& cfg) {
    std::vector<WhistleEvent> raw;
    const std::size_t n = probs.size();
    std::size_t k = 0;
    while (k < n) {
        if (probs[k] < cfg.threshold) {
            ++k;
            continue;
        }
        std::size_t end = k;
        double peak = 0.0;
        while (end < n && probs[end] >= cfg.threshold) peak = std::max(peak, probs[end++]);
        if (end - k >= std::max<std::size_t>(cfg.min_run, 1)) {
            const double start_t = first_center + (static_cast<double>(k) - 0.5) * hop_seconds;
            const double end_t = first_center + (static_cast<double>(end - 1) + 0.5) * hop_seconds;
            raw.push_back({start_t, end_t, peak});
        }
        k = end;
    }

    std::vector<WhistleEvent> merged;
    for (const auto& ev : raw) {
        if (!merged.empty() && ev.start - merged.back().end < cfg.merge_gap) {
            merged.back().end = ev.end;
            merged.back().peak_confidence = std::max(merged.back().peak_confidence, ev.peak_confidence);
        } else {
            merged.push_back(ev);
        }
    }
    return merged;
}

template <class T>
std::vector<double> spectrogram_probabilities(ckconv::WhistleNet<T>& net, const audio::Spectrogram& spec) {
    if (spec.empty()) throw EmptyInputError("detect: empty spectrogram");
    const std::size_t bins = spec.frames.front().bins.size();
    nn::Tensor<T> x({spec.size(), bins});
    for (std::size_t r = 0; r < spec.size(); ++r) {
        if (spec.frames[r].bins.size() != bins) throw ShapeError("detect: ragged spectrogram");
        for (std::size_t k = 0; k < bins; ++k) x[r * bins + k] = static_cast<T>(spec.frames[r].bins[k]);
    }
    return predict_probabilities(net, x);
}

template <class T>
std::vector<WhistleEvent> detect_events(ckconv::WhistleNet<T>& net, const audio::Spectrogram& spec,
                                        const DetectConfig& cfg = {}) {
    const auto probs = spectrogram_probabilities(net, spec);
    return extract_events(probs, spec.center_time(0), spec.config.hop_seconds(), cfg);
}

// Fraction of the ground-truth interval covered by the event.
inline double overlap_fraction(const WhistleEvent& ev, const LabelEvent& truth) {
    const double inter = std::min(ev.end, truth.end) - std::max(ev.start, truth.start);
    return inter <= 0.0 ? 0.0 : inter / truth.duration();
}

struct DetectionScore {
    std::size_t truths = 0;
    std::size_t recovered = 0;
    std::size_t false_events = 0;
};

// A truth is recovered when some event covers >= min_overlap of it; an
// event that overlaps no truth at all is a false event.
inline DetectionScore score_events(const std::vector<WhistleEvent>& events, const std::vector<LabelEvent>& truths,
                                   double min_overlap = 0.5) {
    DetectionScore s;
    for (const auto& t : truths) {
        if (!t.is_whistle()) continue;
        ++s.truths;
        for (const auto& ev : events)
            if (overlap_fraction(ev, t) >= min_overlap) {
                ++s.recovered;
                break;
            }
    }
    for (const auto& ev : events) {
        bool hit = false;
        for (const auto& t : truths)
            if (t.is_whistle() && overlap_fraction(ev, t) > 0.0) hit = true;
        if (!hit) ++s.false_events;
    }
    return s;
}

}  // namespace refsig::whistle
