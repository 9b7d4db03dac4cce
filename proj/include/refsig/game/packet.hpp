#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "refsig/common/error.hpp"

namespace refsig::game {

enum class SignalKind : std::uint8_t { Gesture = 0, Whistle = 1 };

inline std::string_view to_string(SignalKind k) { return k == SignalKind::Gesture ? "gesture" : "whistle"; }

struct DetectionPacket {
    std::uint8_t robot_id = 0;
    SignalKind kind = SignalKind::Gesture;
    std::uint16_t sequence = 0;
    double detect_time = 0.0;

    friend bool operator==(const DetectionPacket&, const DetectionPacket&) = default;
};

inline constexpr std::size_t kPacketSize = 12;

// robot_id u8, kind u8, sequence u16, detect_time f64; little-endian.
inline std::array<std::uint8_t, kPacketSize> encode_packet(const DetectionPacket& p) {
    std::array<std::uint8_t, kPacketSize> out{};
    out[0] = p.robot_id;
    out[1] = static_cast<std::uint8_t>(p.kind);
    out[2] = static_cast<std::uint8_t>(p.sequence & 0xff);
    out[3] = static_cast<std::uint8_t>(p.sequence >> 8);
    const auto bits = std::bit_cast<std::uint64_t>(p.detect_time);
    for (int i = 0; i < 8; ++i) out[4 + i] = static_cast<std::uint8_t>(bits >> (8 * i));
    return out;
}

inline DetectionPacket decode_packet(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kPacketSize)
        throw FormatError("detection packet: expected 12 bytes, got " + std::to_string(bytes.size()));
    if (bytes[1] > 1) throw FormatError("detection packet: unknown signal kind " + std::to_string(bytes[1]));
    DetectionPacket p;
    p.robot_id = bytes[0];
    p.kind = static_cast<SignalKind>(bytes[1]);
    p.sequence = static_cast<std::uint16_t>(bytes[2] | (bytes[3] << 8));
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[4 + i]) << (8 * i);
    p.detect_time = std::bit_cast<double>(bits);
    return p;
}

}  // namespace refsig::game
