#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "refsig/audio/synth.hpp"
#include "refsig/common/random.hpp"
#include "refsig/whistle/dataset.hpp"
#include "refsig/whistle/labels.hpp"

namespace refsig::whistle {

// Synthetic stand-in for a match-recording corpus: each clip holds one
// whistle whose length is set so that the window-level class ratio lands
// near `ratio` : 1.
struct CorpusConfig {
    std::size_t clips = 40;
    double clip_duration = 3.0;
    double ratio = 10.0;
    double min_snr_db = -10.0;
    double max_snr_db = 0.0;
    double min_freq = 2000.0;
    double max_freq = 4500.0;
    // Fraction of clips that contain no whistle at all.
    double negative_clip_fraction = 0.0;
    std::uint64_t seed = 0;
    int sample_rate = 44100;
    std::string prefix = "clip";
};

struct CorpusClipInfo {
    double snr_db = 0.0;
    double whistle_freq = 0.0;
};

inline std::string clip_id(const std::string& prefix, std::size_t i) {
    std::ostringstream os;
    os << prefix << '_' << std::setw(4) << std::setfill('0') << i;
    return os.str();
}

inline std::vector<LabeledClip> synth_corpus(const CorpusConfig& cfg, std::vector<CorpusClipInfo>* info = nullptr) {
    if (cfg.ratio <= 0.0) throw ArgumentError("corpus: ratio must be positive");
    if (cfg.clip_duration <= 0.1) throw ArgumentError("corpus: clip duration too short");
    Rng rng(cfg.seed);
    std::vector<LabeledClip> out;
    out.reserve(cfg.clips);
    const double whistle_len = cfg.clip_duration / (cfg.ratio + 1.0);
    for (std::size_t i = 0; i < cfg.clips; ++i) {
        audio::WhistleSynthParams p;
        p.duration = cfg.clip_duration;
        p.sample_rate = cfg.sample_rate;
        p.whistle_freq = rng.uniform(cfg.min_freq, cfg.max_freq);
        p.snr_db = rng.uniform(cfg.min_snr_db, cfg.max_snr_db);
        p.seed = rng.next_u64();
        const bool negative = rng.bernoulli(cfg.negative_clip_fraction);
        const double margin = 0.05;
        const double start = rng.uniform(margin, cfg.clip_duration - whistle_len - margin);
        if (!negative) p.whistle_intervals.push_back({start, start + whistle_len});
        auto synth = audio::synth_whistle_clip(p);
        out.push_back({std::move(synth.clip), std::move(synth.labels), clip_id(cfg.prefix, i)});
        if (info) info->push_back({p.snr_db, p.whistle_freq});
    }
    return out;
}

// Writes `<id>.wav` and `<id>.txt` (Audacity labels) per clip into `dir`.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<LabeledClip>& clips) {
    std::filesystem::create_directories(dir);
    for (const auto& c : clips) {
        audio::write_wav(dir / (c.source_id + ".wav"), c.clip);
        std::ofstream labels(dir / (c.source_id + ".txt"));
        if (!labels) throw IoError("cannot write labels for " + c.source_id);
        write_audacity_labels(labels, c.labels);
    }
}

// Every `*.wav` in `dir` (sorted by name) with its sibling `.txt` label file;
// a missing label file means the clip has no whistle.
inline std::vector<LabeledClip> load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> wavs;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    std::sort(wavs.begin(), wavs.end());
    std::vector<LabeledClip> out;
    for (const auto& w : wavs) {
        LabeledClip c;
        c.clip = audio::load_wav(w);
        c.source_id = w.stem().string();
        auto txt = w;
        txt.replace_extension(".txt");
        if (std::filesystem::exists(txt)) c.labels = parse_audacity_labels(txt);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace refsig::whistle
