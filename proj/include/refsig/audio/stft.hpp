#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "refsig/audio/fft.hpp"
#include "refsig/audio/wav.hpp"
#include "refsig/common/error.hpp"

namespace refsig::audio {

enum class WindowFunction { Rectangular, Hann };

struct SpectralConfig {
    std::size_t window_size = 1024;
    std::size_t hop_size = 512;
    WindowFunction window_function = WindowFunction::Hann;
    // ln(1 + magnitude) when set.
    bool log_compress = true;
    int sample_rate = 44100;

    std::size_t bin_count() const { return window_size / 2 + 1; }

    double hop_seconds() const {
        return static_cast<double>(hop_size) / static_cast<double>(sample_rate);
    }

    void validate() const {
        if (window_size == 0 || !std::has_single_bit(window_size))
            throw ArgumentError("window_size must be a power of two");
        if (hop_size == 0 || hop_size > window_size)
            throw ArgumentError("hop_size must be in (0, window_size]");
        if (sample_rate <= 0) throw ArgumentError("sample_rate must be positive");
    }
};

struct SpectralFrame {
    std::vector<double> bins;
    std::size_t frame_index = 0;
    double start_time = 0.0;
};

struct Spectrogram {
    std::vector<SpectralFrame> frames;
    SpectralConfig config;
    std::string source_id;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }

    // Center of frame k in seconds.
    double center_time(std::size_t k) const {
        return (static_cast<double>(k * config.hop_size) + 0.5 * static_cast<double>(config.window_size)) /
               static_cast<double>(config.sample_rate);
    }
};

inline std::size_t frame_count(std::size_t clip_length, const SpectralConfig& config) {
    if (clip_length < config.window_size) return 0;
    return (clip_length - config.window_size) / config.hop_size + 1;
}

inline std::vector<double> window_coefficients(const SpectralConfig& config) {
    std::vector<double> w(config.window_size, 1.0);
    if (config.window_function == WindowFunction::Hann) {
        // Periodic Hann.
        const double n = static_cast<double>(config.window_size);
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    }
    return w;
}

// Magnitude spectrum of a single, already-windowed block.
inline std::vector<double> magnitude_spectrum(const FftPlan& plan, std::span<const double> block) {
    std::vector<std::complex<double>> spectrum;
    plan.forward(block, spectrum);
    std::vector<double> mags(plan.size() / 2 + 1);
    for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(spectrum[k]);
    return mags;
}

inline Spectrogram stft(const AudioClip& clip, const SpectralConfig& config, std::string source_id = {}) {
    config.validate();
    if (clip.sample_rate != config.sample_rate)
        throw ArgumentError("stft: clip sample rate " + std::to_string(clip.sample_rate) +
                            " does not match config rate " + std::to_string(config.sample_rate));
    if (clip.samples.size() < config.window_size)
        throw EmptyInputError("stft: clip of " + std::to_string(clip.samples.size()) +
                              " samples is shorter than one window");

    const FftPlan plan(config.window_size);
    const auto window = window_coefficients(config);
    Spectrogram out;
    out.config = config;
    out.source_id = std::move(source_id);
    const std::size_t frames = frame_count(clip.samples.size(), config);
    out.frames.reserve(frames);

    std::vector<double> block(config.window_size);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t offset = f * config.hop_size;
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = clip.samples[offset + i] * window[i];
        SpectralFrame frame;
        frame.bins = magnitude_spectrum(plan, block);
        if (config.log_compress)
            for (double& b : frame.bins) b = std::log1p(b);
        frame.frame_index = f;
        frame.start_time = static_cast<double>(offset) / static_cast<double>(config.sample_rate);
        out.frames.push_back(std::move(frame));
    }
    return out;
}

// Text dump: header `# bins=513 hop=512 sr=44100`, then one frame per line.
inline void write_spectrogram(std::ostream& os, const Spectrogram& spec) {
    os << "# bins=" << spec.config.bin_count() << " hop=" << spec.config.hop_size
       << " sr=" << spec.config.sample_rate << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& frame : spec.frames) {
        for (std::size_t i = 0; i < frame.bins.size(); ++i) {
            if (i) os << ' ';
            os << frame.bins[i];
        }
        os << '\n';
    }
}

inline Spectrogram read_spectrogram(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("spectrogram: missing header");
    std::size_t bins = 0, hop = 0;
    int sr = 0;
    if (std::sscanf(line.c_str(), "# bins=%zu hop=%zu sr=%d", &bins, &hop, &sr) != 3 || bins < 2)
        throw FormatError("spectrogram: malformed header '" + line + "'");
    Spectrogram spec;
    spec.config.window_size = (bins - 1) * 2;
    spec.config.hop_size = hop;
    spec.config.sample_rate = sr;
    spec.config.validate();
    std::size_t index = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        SpectralFrame frame;
        double v = 0.0;
        while (ls >> v) frame.bins.push_back(v);
        if (frame.bins.size() != bins)
            throw FormatError("spectrogram: frame " + std::to_string(index) + " has " +
                              std::to_string(frame.bins.size()) + " bins, expected " + std::to_string(bins));
        frame.frame_index = index;
        frame.start_time = static_cast<double>(index * hop) / static_cast<double>(sr);
        spec.frames.push_back(std::move(frame));
        ++index;
    }
    return spec;
}

}  // namespace refsig::audio
