#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <vector>

#include "oracles/oracles.hpp"
#include "refsig/audio/fft.hpp"
#include "refsig/audio/stft.hpp"
#include "refsig/audio/synth.hpp"
#include "refsig/audio/wav.hpp"
#include "refsig/common/random.hpp"

using namespace refsig;
using namespace refsig::audio;

namespace {

// Hand-assembled RIFF image so the decoder is tested against bytes, not
// against our own encoder.
std::vector<std::uint8_t> raw_wav(const std::vector<std::int16_t>& interleaved, int channels, int rate = 44100,
                                  int format = 1, int bits = 16) {
    std::vector<std::uint8_t> b;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto u16 = [&](std::uint16_t v) {
        b.push_back(static_cast<std::uint8_t>(v));
        b.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    const auto data = static_cast<std::uint32_t>(interleaved.size() * 2);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    u32(36 + data);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    u32(16);
    u16(static_cast<std::uint16_t>(format));
    u16(static_cast<std::uint16_t>(channels));
    u32(static_cast<std::uint32_t>(rate));
    u32(static_cast<std::uint32_t>(rate * channels * bits / 8));
    u16(static_cast<std::uint16_t>(channels * bits / 8));
    u16(static_cast<std::uint16_t>(bits));
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    u32(data);
    for (auto s : interleaved) u16(static_cast<std::uint16_t>(s));
    return b;
}

AudioClip clip_of(std::vector<double> samples) { return {std::move(samples), 44100}; }

SpectralConfig raw_config() {
    SpectralConfig c;
    c.window_function = WindowFunction::Rectangular;
    c.log_compress = false;
    return c;
}

}  // namespace

TEST(Wav, StereoIsAveragedToMono) {
    const auto clip = decode_wav(raw_wav({6554, 13107}, 2));
    ASSERT_EQ(clip.samples.size(), 1u);
    EXPECT_NEAR(clip.samples[0], 0.3, 1e-4);
}

TEST(Wav, PcmScaling) {
    const auto clip = decode_wav(raw_wav({16384, -32768, 0}, 1, 16000));
    EXPECT_EQ(clip.sample_rate, 16000);
    EXPECT_DOUBLE_EQ(clip.samples[0], 0.5);
    EXPECT_DOUBLE_EQ(clip.samples[1], -1.0);
    EXPECT_DOUBLE_EQ(clip.samples[2], 0.0);
}

TEST(Wav, RejectsNonRiff) {
    std::vector<std::uint8_t> junk(64, 'x');
    EXPECT_THROW(decode_wav(junk), FormatError);
    EXPECT_THROW(decode_wav(std::vector<std::uint8_t>{}), FormatError);
}

TEST(Wav, RejectsUnsupportedEncodings) {
    EXPECT_THROW(decode_wav(raw_wav({0, 0}, 1, 44100, 3)), UnsupportedError);
    EXPECT_THROW(decode_wav(raw_wav({0, 0, 0}, 1, 44100, 1, 24)), UnsupportedError);
    EXPECT_THROW(decode_wav(raw_wav({0, 0, 0, 0, 0, 0}, 3)), UnsupportedError);
}

TEST(Wav, TruncatedChunkIsFormatError) {
    auto bytes = raw_wav({1, 2, 3, 4}, 1);
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(decode_wav(bytes), FormatError);
}

TEST(Wav, EncodeDecodeRoundTripWithinQuantization) {
    Rng rng(3);
    std::vector<double> s(500);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    const auto back = decode_wav(encode_wav(s, 22050));
    ASSERT_EQ(back.samples.size(), s.size());
    EXPECT_EQ(back.sample_rate, 22050);
    // Encoded as round(s * 32767), decoded as q / 32768: half a step of
    // rounding plus the scale mismatch |s| / 32768.
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_NEAR(back.samples[i], s[i], (0.5 + std::abs(s[i])) / 32768.0 + 1e-15);
}

TEST(Fft, SizeMustBePowerOfTwo) {
    EXPECT_THROW(FftPlan(1000), ArgumentError);
    EXPECT_THROW(FftPlan(0), ArgumentError);
    EXPECT_NO_THROW(FftPlan(1024));
}

TEST(Stft, MatchesDftOracleOnRandomWindows) {
    Rng rng(101);
    const FftPlan plan(1024);
    double worst = 0.0;
    for (int r = 0; r < 100; ++r) {
        std::vector<double> block(1024);
        for (auto& v : block) v = rng.uniform(-1.0, 1.0);
        const auto fast = magnitude_spectrum(plan, block);
        const auto slow = oracle::dft_magnitudes(block);
        ASSERT_EQ(fast.size(), 513u);
        for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Stft, ParsevalWithRectangularWindow) {
    Rng rng(7);
    std::vector<double> x(1024);
    for (auto& v : x) v = rng.normal();
    const auto spec = stft(clip_of(x), raw_config());
    ASSERT_EQ(spec.size(), 1u);
    double te = 0.0, fe = 0.0;
    for (double v : x) te += v * v;
    const auto& m = spec.frames[0].bins;
    for (std::size_t k = 0; k < m.size(); ++k) fe += (k == 0 || k == 512 ? 1.0 : 2.0) * m[k] * m[k];
    EXPECT_NEAR(fe / 1024.0, te, 1e-9 * te);
}

TEST(Stft, FrameCounts) {
    const SpectralConfig c;
    EXPECT_EQ(frame_count(1024, c), 1u);
    EXPECT_EQ(frame_count(1023, c), 0u);
    EXPECT_EQ(frame_count(1535, c), 1u);
    EXPECT_EQ(frame_count(1536, c), 2u);
    EXPECT_EQ(frame_count(44100, c), (44100u - 1024u) / 512u + 1u);
    EXPECT_EQ(stft(clip_of(std::vector<double>(44100, 0.1)), c).size(), 85u);
}

TEST(Stft, DcSignalConcentratesInBinZero) {
    const auto spec = stft(clip_of(std::vector<double>(1024, 1.0)), raw_config());
    const auto& m = spec.frames[0].bins;
    EXPECT_NEAR(m[0], 1024.0, 1e-9);
    for (std::size_t k = 1; k < m.size(); ++k) EXPECT_NEAR(m[k], 0.0, 1e-9);
}

TEST(Stft, BinCenteredSinusoid) {
    std::vector<double> x(1024);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::cos(2.0 * std::numbers::pi * 32.0 * n / 1024.0);
    const auto spec = stft(clip_of(x), raw_config());
    const auto& m = spec.frames[0].bins;
    EXPECT_NEAR(m[32], 512.0, 1e-9);
    for (std::size_t k = 0; k < m.size(); ++k)
        if (k != 32) { EXPECT_NEAR(m[k], 0.0, 1e-9); }
}

TEST(Stft, ImpulseIsFlatAndZerosStayZero) {
    std::vector<double> x(1024, 0.0);
    x[0] = 1.0;
    const auto impulse = stft(clip_of(x), raw_config());
    for (double v : impulse.frames[0].bins) EXPECT_NEAR(v, 1.0, 1e-12);
    const auto silence = stft(clip_of(std::vector<double>(1024, 0.0)), SpectralConfig{});
    for (double v : silence.frames[0].bins) EXPECT_EQ(v, 0.0);
}

TEST(Stft, LogCompressionIsLog1pOfMagnitude) {
    Rng rng(9);
    std::vector<double> x(2048);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    auto lin_cfg = SpectralConfig{};
    lin_cfg.log_compress = false;
    const auto lin = stft(clip_of(x), lin_cfg);
    const auto log = stft(clip_of(x), SpectralConfig{});
    ASSERT_EQ(lin.size(), log.size());
    for (std::size_t f = 0; f < lin.size(); ++f)
        for (std::size_t k = 0; k < 513; ++k) EXPECT_NEAR(log.frames[f].bins[k], std::log1p(lin.frames[f].bins[k]), 1e-12);
}

TEST(Stft, HannWindowIsPeriodic) {
    const auto w = window_coefficients(SpectralConfig{});
    EXPECT_EQ(w[0], 0.0);
    EXPECT_NEAR(w[512], 1.0, 1e-15);
    EXPECT_NEAR(w[1023], w[1], 1e-15);
}

TEST(Stft, ShortClipIsEmptyInput) {
    EXPECT_THROW(stft(clip_of(std::vector<double>(1023, 0.0)), SpectralConfig{}), EmptyInputError);
}

TEST(Stft, SampleRateMismatchIsArgumentError) {
    AudioClip c{std::vector<double>(4096, 0.0), 16000};
    EXPECT_THROW(stft(c, SpectralConfig{}), ArgumentError);
}

TEST(Stft, FrameTimes) {
    const auto spec = stft(clip_of(std::vector<double>(4096, 0.0)), SpectralConfig{});
    EXPECT_DOUBLE_EQ(spec.frames[2].start_time, 1024.0 / 44100.0);
    EXPECT_DOUBLE_EQ(spec.center_time(0), 512.0 / 44100.0);
}

TEST(Stft, TextRoundTrip) {
    Rng rng(5);
    std::vector<double> x(3000);
    for (auto& v : x) v = rng.normal();
    const auto spec = stft(clip_of(x), SpectralConfig{});
    std::stringstream ss;
    write_spectrogram(ss, spec);
    const auto back = read_spectrogram(ss);
    ASSERT_EQ(back.size(), spec.size());
    for (std::size_t f = 0; f < spec.size(); ++f) EXPECT_EQ(back.frames[f].bins, spec.frames[f].bins);
}

TEST(Stft, MalformedTextIsFormatError) {
    std::stringstream bad_header("bins 513\n");
    EXPECT_THROW(read_spectrogram(bad_header), FormatError);
    std::stringstream ragged("# bins=3 hop=2 sr=8\n1 2 3\n1 2\n");
    EXPECT_THROW(read_spectrogram(ragged), FormatError);
}

TEST(Synth, DeterministicForSeed) {
    WhistleSynthParams p;
    p.whistle_intervals = {{0.2, 0.6}};
    p.seed = 42;
    const auto a = synth_whistle_clip(p);
    const auto b = synth_whistle_clip(p);
    EXPECT_EQ(a.clip.samples, b.clip.samples);
    ASSERT_EQ(a.labels.size(), 1u);
    EXPECT_DOUBLE_EQ(a.labels[0].start, 0.2);
    EXPECT_EQ(a.clip.samples.size(), 44100u);
    double peak = 0.0;
    for (double s : a.clip.samples) peak = std::max(peak, std::abs(s));
    EXPECT_DOUBLE_EQ(peak, 1.0);
}

TEST(Synth, ToneDominatesInsideWhistle) {
    WhistleSynthParams p;
    p.whistle_intervals = {{0.0, 1.0}};
    p.snr_db = 20.0;
    p.seed = 1;
    const auto clip = synth_whistle_clip(p).clip;
    const auto spec = stft(clip, SpectralConfig{});
    const auto& bins = spec.frames[spec.size() / 2].bins;
    const auto peak = static_cast<std::size_t>(std::max_element(bins.begin(), bins.end()) - bins.begin());
    const double hz = static_cast<double>(peak) * 44100.0 / 1024.0;
    EXPECT_NEAR(hz, 3000.0, 3000.0 * 0.015 + 44100.0 / 1024.0);
}

TEST(Synth, RejectsOverlapAndBadRanges) {
    WhistleSynthParams p;
    p.whistle_intervals = {{0.1, 0.5}, {0.4, 0.8}};
    EXPECT_THROW(synth_whistle_clip(p), ArgumentError);
    p.whistle_intervals = {{0.5, 1.5}};
    EXPECT_THROW(synth_whistle_clip(p), ArgumentError);
    p.whistle_intervals = {};
    p.whistle_freq = 30000.0;
    EXPECT_THROW(synth_whistle_clip(p), ArgumentError);
}
