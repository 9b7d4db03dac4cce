#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "refsig/common/error.hpp"

namespace refsig::audio {

// Iterative radix-2 decimation-in-time FFT with precomputed twiddles and
// bit-reversal table. One plan per transform size; plans are immutable.
class FftPlan {
public:
    explicit FftPlan(std::size_t size) : size_(size) {
        if (size == 0 || !std::has_single_bit(size))
            throw ArgumentError("fft size must be a power of two, got " + std::to_string(size));
        const int bits = std::countr_zero(size);
        reversed_.resize(size);
        for (std::size_t i = 0; i < size; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            reversed_[i] = r;
        }
        twiddles_.resize(size / 2);
        for (std::size_t k = 0; k < size / 2; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
            twiddles_[k] = {std::cos(a), std::sin(a)};
        }
    }

    std::size_t size() const { return size_; }

    void forward(std::span<const double> input, std::vector<std::complex<double>>& out) const {
        if (input.size() != size_) throw ShapeError("fft input length mismatch");
        out.resize(size_);
        for (std::size_t i = 0; i < size_; ++i) out[reversed_[i]] = {input[i], 0.0};
        for (std::size_t len = 2; len <= size_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = size_ / len;
            for (std::size_t start = 0; start < size_; start += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const auto w = twiddles_[j * stride];
                    const auto u = out[start + j];
                    const auto v = out[start + j + half] * w;
                    out[start + j] = u + v;
                    out[start + j + half] = u - v;
                }
            }
        }
    }

private:
    std::size_t size_;
    std::vector<std::size_t> reversed_;
    std::vector<std::complex<double>> twiddles_;
};

}  // namespace refsig::audio
