#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "refsig/audio/wav.hpp"
#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/whistle/labels.hpp"

namespace refsig::audio {

struct WhistleSynthParams {
    double duration = 1.0;
    std::vector<std::pair<double, double>> whistle_intervals;
    double whistle_freq = 3000.0;
    double snr_db = 20.0;
    std::uint64_t seed = 0;
    int sample_rate = 44100;
    // Vibrato depth as a fraction of the carrier and its rate in Hz.
    double vibrato_depth = 0.01;
    double vibrato_rate = 6.0;
};

struct SynthesizedClip {
    AudioClip clip;
    std::vector<whistle::LabelEvent> labels;
};

// Unit-power white Gaussian noise plus a vibrato tone inside each interval.
// SNR is tone power over noise power (tone power = amplitude^2 / 2). The
// result is peak-normalized so every sample lies in [-1, 1].
inline SynthesizedClip synth_whistle_clip(const WhistleSynthParams& p) {
    if (p.duration <= 0.0) throw ArgumentError("synth: duration must be positive");
    if (p.sample_rate <= 0) throw ArgumentError("synth: sample_rate must be positive");
    if (p.whistle_freq <= 0.0 || p.whistle_freq >= 0.5 * p.sample_rate)
        throw ArgumentError("synth: whistle frequency must lie in (0, sample_rate/2)");

    auto intervals = p.whistle_intervals;
    std::sort(intervals.begin(), intervals.end());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto [s, e] = intervals[i];
        if (s < 0.0 || e > p.duration || s >= e)
            throw ArgumentError("synth: interval must satisfy 0 <= start < end <= duration");
        if (i > 0 && s < intervals[i - 1].second) throw ArgumentError("synth: whistle intervals overlap");
    }

    const auto n = static_cast<std::size_t>(std::llround(p.duration * p.sample_rate));
    const double fs = static_cast<double>(p.sample_rate);
    Rng rng(p.seed);
    SynthesizedClip out;
    out.clip.sample_rate = p.sample_rate;
    out.clip.samples.resize(n);
    for (auto& s : out.clip.samples) s = rng.normal();

    const double amplitude = std::sqrt(2.0 * std::pow(10.0, p.snr_db / 10.0));
    const double ramp = 0.005;
    for (const auto& [start, end] : intervals) {
        const auto first = static_cast<std::size_t>(std::ceil(start * fs));
        const auto last = std::min(n, static_cast<std::size_t>(std::ceil(end * fs)));
        double phase = 2.0 * std::numbers::pi * rng.uniform();
        for (std::size_t i = first; i < last; ++i) {
            const double t = static_cast<double>(i) / fs;
            const double rel = t - start;
            const double freq =
                p.whistle_freq * (1.0 + p.vibrato_depth * std::sin(2.0 * std::numbers::pi * p.vibrato_rate * rel));
            double env = 1.0;
            const double edge = std::min(rel, end - t);
            if (edge < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * std::max(edge, 0.0) / ramp);
            out.clip.samples[i] += env * amplitude * std::sin(phase);
            phase += 2.0 * std::numbers::pi * freq / fs;
        }
        out.labels.push_back({start, end, whistle::kWhistleLabel});
    }

    double peak = 0.0;
    for (double s : out.clip.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0)
        for (double& s : out.clip.samples) s /= peak;
    return out;
}

}  // namespace refsig::audio
