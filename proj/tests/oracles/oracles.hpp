#pragma once

// Reference implementations used only by the tests. Each one is written
// from the defining formula, without reusing library code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "refsig/game/packet.hpp"
#include "refsig/nn/tensor.hpp"

namespace oracle {

// |sum_n x[n] exp(-2 pi i k n / N)| for k = 0..N/2, accumulated in long
// double. The N roots of unity are tabulated once per size.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
    const std::size_t n = x.size();
    static thread_local std::vector<std::complex<long double>> roots;
    if (roots.size() != n) {
        roots.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const long double phase =
                -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(j) / static_cast<long double>(n);
            roots[j] = {std::cos(phase), std::sin(phase)};
        }
    }
    std::vector<double> out;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        long double re = 0.0L, im = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const auto& w = roots[(k * t) % n];
            re += x[t] * w.real();
            im += x[t] * w.imag();
        }
        out.push_back(static_cast<double>(std::sqrt(re * re + im * im)));
    }
    return out;
}

// (x * psi)(t) = sum_c sum_{tau=0}^{t} x_c(tau) psi_c(t - tau), with psi zero
// outside lags [0, K).
inline refsig::nn::Tensor<double> causal_conv(const refsig::nn::Tensor<double>& x,
                                              const refsig::nn::Tensor<double>& kernel) {
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2), K = kernel.dim(0), O = kernel.dim(1);
    refsig::nn::Tensor<double> y({B, O, L});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t t = 0; t < L; ++t) {
                long double acc = 0.0L;
                for (std::size_t tau = 0; tau <= t; ++tau) {
                    const std::size_t lag = t - tau;
                    if (lag >= K) continue;
                    for (std::size_t c = 0; c < C; ++c)
                        acc += static_cast<long double>(x.at(b, c, tau)) * kernel.at(lag, o, c);
                }
                y.at(b, o, t) = static_cast<double>(acc);
            }
    return y;
}

// fired[t] iff the streak of positives ending at t has length exactly `run`.
inline std::vector<bool> filter_fires(const std::vector<bool>& seq, std::size_t run = 4) {
    std::vector<bool> fired(seq.size(), false);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        std::size_t streak = 0;
        for (std::size_t j = t + 1; j-- > 0 && seq[j];) ++streak;
        fired[t] = streak == run;
    }
    return fired;
}

// Enumerates every K-subset of robot ids and asks whether each member has a
// packet of `kind` stamped inside [now - window, now].
inline bool quorum_reached(const std::vector<refsig::game::DetectionPacket>& packets, refsig::game::SignalKind kind,
                           std::size_t quorum, double window, double now) {
    if (quorum == 0) return true;
    std::size_t robots = 0;
    for (const auto& p : packets) robots = std::max<std::size_t>(robots, p.robot_id + 1u);
    auto reported = [&](std::size_t r) {
        for (const auto& p : packets)
            if (p.robot_id == r && p.kind == kind && p.detect_time >= now - window && p.detect_time <= now)
                return true;
        return false;
    };
    std::vector<std::size_t> pick;
    std::function<bool(std::size_t)> choose = [&](std::size_t from) {
        if (pick.size() == quorum) {
            for (auto r : pick)
                if (!reported(r)) return false;
            return true;
        }
        for (std::size_t r = from; r < robots; ++r) {
            pick.push_back(r);
            const bool ok = choose(r + 1);
            pick.pop_back();
            if (ok) return true;
        }
        return false;
    };
    return choose(0);
}

// Central differences of f at every coordinate of `values`.
inline std::vector<double> numeric_gradient(std::vector<double*> coords, const std::function<double()>& f,
                                            double eps = 1e-5) {
    std::vector<double> g;
    for (double* v : coords) {
        const double saved = *v;
        *v = saved + eps;
        const double up = f();
        *v = saved - eps;
        const double down = f();
        *v = saved;
        g.push_back((up - down) / (2.0 * eps));
    }
    return g;
}

inline double relative_error(double a, double n) { return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}); }

}  // namespace oracle
