#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "refsig/common/error.hpp"
#include "refsig/nn/tensor.hpp"

namespace refsig::nn {

// CKPT1 layout: the 5 magic bytes, then records until end of stream:
//   u32 name length, name bytes, u32 rank, rank x u32 extents, f64 values.
// All integers and floats are little-endian.

using NamedTensor = std::pair<std::string, Tensor<double>>;

inline constexpr char kCheckpointMagic[5] = {'C', 'K', 'P', 'T', '1'};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b, 4);
}

inline void write_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    os.write(b, 8);
}

inline bool read_exact(std::istream& is, char* dst, std::size_t n) {
    is.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    if (!read_exact(is, reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint: truncated integer");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double read_f64(std::istream& is) {
    unsigned char b[8];
    if (!read_exact(is, reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint: truncated value");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& records) {
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    for (const auto& [name, tensor] : records) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(tensor.rank()));
        for (auto e : tensor.shape()) detail::write_u32(os, static_cast<std::uint32_t>(e));
        for (double v : tensor.values()) detail::write_f64(os, v);
    }
    if (!os) throw IoError("checkpoint: write failed");
}

inline std::vector<NamedTensor> read_checkpoint(std::istream& is) {
    char magic[5];
    if (!detail::read_exact(is, magic, 5) || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw FormatError("checkpoint: bad magic, expected CKPT1");
    std::vector<NamedTensor> records;
    while (is.peek() != std::char_traits<char>::eof()) {
        const auto name_len = detail::read_u32(is);
        std::string name(name_len, '\0');
        if (!detail::read_exact(is, name.data(), name_len)) throw FormatError("checkpoint: truncated name");
        const auto rank = detail::read_u32(is);
        Shape shape(rank);
        for (auto& e : shape) e = detail::read_u32(is);
        std::vector<double> values(element_count(shape));
        for (auto& v : values) v = detail::read_f64(is);
        records.emplace_back(std::move(name), Tensor<double>(std::move(shape), std::move(values)));
    }
    return records;
}

inline void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    write_checkpoint(os, records);
}

inline std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_checkpoint(is);
}

inline const Tensor<double>& find_record(const std::vector<NamedTensor>& records, const std::string& name) {
    for (const auto& [n, t] : records)
        if (n == name) return t;
    throw FormatError("checkpoint: missing record '" + name + "'");
}

}  // namespace refsig::nn
