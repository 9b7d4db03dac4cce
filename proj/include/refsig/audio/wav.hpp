#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "refsig/common/error.hpp"

namespace refsig::audio {

struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 44100;

    double duration() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
};

namespace detail {

inline std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

// Decodes an in-memory RIFF/WAVE image. Only 16-bit PCM, 1 or 2 channels.
inline AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
    using detail::read_u16;
    using detail::read_u32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("wav: missing RIFF/WAVE header");
    }

    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint16_t bits = 0;
    std::uint32_t rate = 0;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw FormatError("wav: truncated chunk");

        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError("wav: fmt chunk too small");
            const std::uint16_t format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format != 1) throw UnsupportedError("wav: only PCM encoding is supported");
            if (bits != 16) throw UnsupportedError("wav: only 16-bit samples are supported");
            if (channels != 1 && channels != 2)
                throw UnsupportedError("wav: only mono or stereo is supported");
            if (rate == 0) throw FormatError("wav: zero sample rate");
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
            const std::size_t frame_bytes = 2u * channels;
            const std::size_t frames = size / frame_bytes;
            AudioClip clip;
            clip.sample_rate = static_cast<int>(rate);
            clip.samples.resize(frames);
            for (std::size_t i = 0; i < frames; ++i) {
                double acc = 0.0;
                for (std::size_t c = 0; c < channels; ++c) {
                    const auto raw = static_cast<std::int16_t>(
                        read_u16(bytes.data() + body + i * frame_bytes + 2 * c));
                    acc += static_cast<double>(raw) / 32768.0;
                }
                clip.samples[i] = acc / static_cast<double>(channels);
            }
            return clip;
        }
        pos = body + size + (size & 1u);
    }
    throw FormatError("wav: no data chunk");
}

inline AudioClip load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

// Quantizes to 16-bit PCM: round(sample * 32767), clamped.
inline std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate,
                                            int channels = 1) {
    using detail::put_u16;
    using detail::put_u32;
    if (channels != 1 && channels != 2) throw ArgumentError("wav: channels must be 1 or 2");
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(sample_rate));
    put_u32(out, static_cast<std::uint32_t>(sample_rate * channels * 2));
    put_u16(out, static_cast<std::uint16_t>(channels * 2));
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (double s : samples) {
        const double q = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    const auto bytes = encode_wav(clip.samples, clip.sample_rate);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace refsig::audio
