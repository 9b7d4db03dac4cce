#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "refsig/audio/stft.hpp"
#include "refsig/audio/wav.hpp"
#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/whistle/labels.hpp"

namespace refsig::whistle {

enum class WindowLabel : int { NoWhistle = 0, Whistle = 1 };

struct WindowSample {
    audio::SpectralFrame frame;
    WindowLabel label = WindowLabel::NoWhistle;
    std::string source_id;
    double center_time = 0.0;
};

struct LabeledClip {
    audio::AudioClip clip;
    std::vector<LabelEvent> labels;
    std::string source_id;
};

enum class Split { Train, Val, Test };

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

struct DatasetOptions {
    SplitFractions split;
    std::uint64_t seed = 0;
};

struct DatasetSpec {
    std::vector<WindowSample> samples;
    std::vector<std::size_t> train, val, test;  // indices into samples
    std::vector<std::string> train_sources, val_sources, test_sources;
    std::size_t whistle_count = 0;
    std::size_t no_whistle_count = 0;
    std::vector<std::string> warnings;

    // no-whistle : whistle, as a single number (10 means 10:1).
    double class_ratio() const {
        return whistle_count == 0 ? std::numeric_limits<double>::infinity()
                                  : static_cast<double>(no_whistle_count) / static_cast<double>(whistle_count);
    }

    const std::vector<std::size_t>& indices(Split s) const {
        switch (s) {
            case Split::Train: return train;
            case Split::Val: return val;
            default: return test;
        }
    }
};

// Whistle iff the window center lies inside any whistle event.
inline WindowLabel label_for_center(double center, const std::vector<LabelEvent>& events) {
    for (const auto& ev : events)
        if (ev.is_whistle() && ev.contains(center)) return WindowLabel::Whistle;
    return WindowLabel::NoWhistle;
}

inline std::vector<WindowSample> label_windows(const audio::Spectrogram& spec, const std::vector<LabelEvent>& events) {
    std::vector<WindowSample> out;
    out.reserve(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        WindowSample s;
        s.center_time = spec.center_time(k);
        s.label = label_for_center(s.center_time, events);
        s.frame = spec.frames[k];
        s.source_id = spec.source_id;
        out.push_back(std::move(s));
    }
    return out;
}

// Counts for a k-way split of n clips. Every split gets at least one clip
// when n >= 3; the training split absorbs rounding.
inline std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& f) {
    if (n == 0) return {0, 0, 0};
    if (n < 3) return {n, 0, 0};
    auto val = static_cast<std::size_t>(std::llround(f.val * static_cast<double>(n)));
    auto test = static_cast<std::size_t>(std::llround(f.test * static_cast<double>(n)));
    if (f.val > 0.0) val = std::max<std::size_t>(val, 1);
    if (f.test > 0.0) test = std::max<std::size_t>(test, 1);
    while (val + test >= n) {
        if (test >= val && test > 0) --test; else --val;
    }
    return {n - val - test, val, test};
}

// Windows every clip, labels by center time, and splits by clip so no
// source appears in two splits.
inline DatasetSpec build_dataset(const std::vector<LabeledClip>& clips, const audio::SpectralConfig& config,
                                 const DatasetOptions& options = {}) {
    if (clips.empty()) throw ArgumentError("build_dataset: no clips");
    std::vector<std::size_t> order(clips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(options.seed);
    rng.shuffle(order.begin(), order.end());
    const auto counts = split_counts(clips.size(), options.split);

    DatasetSpec ds;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& lc = clips[order[rank]];
        const Split split = rank < counts[0] ? Split::Train : rank < counts[0] + counts[1] ? Split::Val : Split::Test;
        (split == Split::Train ? ds.train_sources : split == Split::Val ? ds.val_sources : ds.test_sources)
            .push_back(lc.source_id);
        if (lc.clip.samples.size() < config.window_size) {
            ds.warnings.push_back("clip '" + lc.source_id + "' is shorter than one window; skipped");
            continue;
        }
        auto windows = label_windows(audio::stft(lc.clip, config, lc.source_id), lc.labels);
        auto& idx = split == Split::Train ? ds.train : split == Split::Val ? ds.val : ds.test;
        for (auto& w : windows) {
            (w.label == WindowLabel::Whistle ? ds.whistle_count : ds.no_whistle_count)++;
            idx.push_back(ds.samples.size());
            ds.samples.push_back(std::move(w));
        }
    }
    if (ds.whistle_count == 0 || ds.no_whistle_count == 0)
        ds.warnings.push_back("dataset contains a single class");
    return ds;
}

// Per-bin mean and standard deviation over the given samples.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline Standardization fit_standardization(const DatasetSpec& ds, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ArgumentError("fit_standardization: empty sample set");
    const std::size_t bins = ds.samples[indices.front()].frame.bins.size();
    Standardization st{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
    for (auto i : indices)
        for (std::size_t k = 0; k < bins; ++k) st.mean[k] += ds.samples[i].frame.bins[k];
    for (auto& m : st.mean) m /= static_cast<double>(indices.size());
    for (auto i : indices)
        for (std::size_t k = 0; k < bins; ++k) {
            const double d = ds.samples[i].frame.bins[k] - st.mean[k];
            st.stddev[k] += d * d;
        }
    for (auto& s : st.stddev) s = std::max(std::sqrt(s / static_cast<double>(indices.size())), 1e-6);
    return st;
}

}  // namespace refsig::whistle
