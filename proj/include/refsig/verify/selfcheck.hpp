#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "refsig/audio/fft.hpp"
#include "refsig/audio/stft.hpp"
#include "refsig/ckconv/causal_conv.hpp"
#include "refsig/ckconv/whistle_net.hpp"
#include "refsig/common/random.hpp"
#include "refsig/game/consensus.hpp"
#include "refsig/gesture/angles.hpp"
#include "refsig/gesture/temporal_filter.hpp"
#include "refsig/nn/gradcheck.hpp"
#include "refsig/nn/layers.hpp"

// Brute-force reference implementations and the checklist run by
// `refsig selfcheck`.
namespace refsig::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline CheckResult timed(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r{std::move(name), false, {}, 0.0};
    try {
        auto [ok, detail] = body();
        r.passed = ok;
        r.detail = std::move(detail);
    } catch (const std::exception& e) {
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

}  // namespace detail

// O(N^2) DFT magnitudes for bins 0..N/2.
inline std::vector<double> naive_dft_magnitude(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        out[k] = std::abs(acc);
    }
    return out;
}

// y[b,o,t] = sum_c sum_{d=0}^{min(t,K-1)} x[b,c,t-d] * kernel[d,o,c]
inline nn::Tensor<double> conv_double_sum(const nn::Tensor<double>& x, const nn::Tensor<double>& kernel) {
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2), K = kernel.dim(0), O = kernel.dim(1);
    nn::Tensor<double> y({B, O, L});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t t = 0; t < L; ++t) {
                double s = 0.0;
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t d = 0; d <= std::min(t, K - 1); ++d)
                        s += x.at(b, c, t - d) * kernel.at(d, o, c);
                y.at(b, o, t) = s;
            }
    return y;
}

// Fires at t iff t closes the first `run` positives of a contiguous run.
inline std::vector<bool> brute_force_fires(const std::vector<bool>& seq, std::size_t run = 4) {
    std::vector<bool> fired(seq.size(), false);
    for (std::size_t t = run - 1; t < seq.size(); ++t) {
        bool all = true;
        for (std::size_t j = t + 1 - run; j <= t; ++j) all = all && seq[j];
        const bool starts_run = t + 1 == run || !seq[t - run];
        fired[t] = all && starts_run;
    }
    return fired;
}

// Quorum by subset search: some set of K packets of the kind, all in the
// window, with pairwise distinct robots.
inline bool consensus_oracle(const std::vector<game::DetectionPacket>& packets, game::SignalKind kind,
                             std::size_t quorum, double window, double now) {
    const std::size_t n = packets.size();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != quorum) continue;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(mask >> i & 1u)) continue;
            const auto& p = packets[i];
            ok = p.kind == kind && p.detect_time >= now - window && p.detect_time <= now;
            for (std::size_t j = 0; j < i && ok; ++j)
                if ((mask >> j & 1u) && packets[j].robot_id == p.robot_id) ok = false;
        }
        if (ok) return true;
    }
    return false;
}

inline CheckResult check_parameter_count() {
    return detail::timed("parameter count", [] {
        ckconv::WhistleNet<double> net;
        const auto bd = ckconv::parameter_breakdown(net);
        std::ostringstream os;
        for (std::size_t i = 0; i < bd.blocks.size(); ++i) os << (i ? " + " : "") << bd.blocks[i];
        os << " + " << bd.head << " (head) = " << bd.total << " vs 59.1k reported";
        const bool ok = bd.total == 59028 && bd.total >= 58500 && bd.total <= 59700;
        return std::pair{ok, os.str()};
    });
}

inline CheckResult check_stft_against_dft(std::size_t windows = 100, std::uint64_t seed = 11) {
    return detail::timed("STFT vs naive DFT + Parseval", [=] {
        Rng rng(seed);
        audio::SpectralConfig cfg;
        const audio::FftPlan plan(cfg.window_size);
        const auto w = audio::window_coefficients(cfg);
        double worst_abs = 0.0, worst_parseval = 0.0;
        std::vector<double> block(cfg.window_size);
        for (std::size_t r = 0; r < windows; ++r) {
            for (std::size_t i = 0; i < block.size(); ++i) block[i] = rng.uniform(-1.0, 1.0) * w[i];
            const auto fast = audio::magnitude_spectrum(plan, block);
            const auto slow = naive_dft_magnitude(block);
            if (fast.size() != cfg.bin_count()) return std::pair{false, std::string("wrong bin count")};
            for (std::size_t k = 0; k < fast.size(); ++k) worst_abs = std::max(worst_abs, std::abs(fast[k] - slow[k]));
            const std::size_t n = block.size();
            double time_energy = 0.0, freq_energy = 0.0;
            for (double v : block) time_energy += v * v;
            for (std::size_t k = 0; k < fast.size(); ++k)
                freq_energy += (k == 0 || k == n / 2 ? 1.0 : 2.0) * fast[k] * fast[k];
            freq_energy /= static_cast<double>(n);
            worst_parseval = std::max(worst_parseval, std::abs(freq_energy - time_energy) / time_energy);
        }
        const bool ok = worst_abs <= 1e-9 && worst_parseval <= 1e-9;
        return std::pair{ok, std::to_string(windows) + " windows, max |diff| " + detail::sci(worst_abs) +
                                 ", Parseval rel " + detail::sci(worst_parseval)};
    });
}

inline CheckResult check_conv_against_double_sum(std::size_t instances = 200, std::uint64_t seed = 12) {
    return detail::timed("causal conv vs double sum + causality", [=] {
        Rng rng(seed);
        double worst = 0.0;
        bool causal = true;
        for (std::size_t r = 0; r < instances; ++r) {
            const std::size_t B = 1 + rng.below(3), C = 1 + rng.below(5), O = 1 + rng.below(5);
            const std::size_t L = 1 + rng.below(48), K = 1 + rng.below(40);
            nn::Tensor<double> x({B, C, L}), k({K, O, C});
            for (auto& v : x.storage()) v = rng.normal();
            for (auto& v : k.storage()) v = rng.normal();
            const auto fast = ckconv::causal_conv(x, k);
            const auto slow = conv_double_sum(x, k);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < fast.size(); ++i) {
                num = std::max(num, std::abs(fast[i] - slow[i]));
                den = std::max(den, std::abs(slow[i]));
            }
            worst = std::max(worst, num / std::max(den, 1e-300));

            const std::size_t t0 = rng.below(L);
            auto mutated = x;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c) mutated.at(b, c, t0) += 1.0 + rng.uniform();
            const auto after = ckconv::causal_conv(mutated, k);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t o = 0; o < O; ++o)
                    for (std::size_t t = 0; t < t0; ++t) causal = causal && after.at(b, o, t) == fast.at(b, o, t);
        }
        const bool ok = worst <= 1e-12 && causal;
        return std::pair{ok, std::to_string(instances) + " instances, max rel " + detail::sci(worst) +
                                 (causal ? ", causal" : ", CAUSALITY VIOLATED")};
    });
}

struct GradientCheckSetup {
    std::size_t batch = 2;
    std::size_t coords_per_target = 6;
    std::uint64_t seed = 13;
    // Adds a constant to every analytic gradient; the check must then fail.
    double fault = 0.0;
};

inline nn::GradCheckReport whistle_net_gradient_report(const GradientCheckSetup& s) {
    ckconv::WhistleNet<double> net;
    Rng init(s.seed);
    net.init(init);
    for (auto& m : net.input_mean) m = init.uniform(-0.1, 0.1);
    for (auto& v : net.input_std) v = init.uniform(0.5, 1.5);
    nn::Tensor<double> x({s.batch, net.config().bins});
    for (auto& v : x.storage()) v = init.normal();
    std::vector<int> labels(s.batch);
    for (std::size_t i = 0; i < s.batch; ++i) labels[i] = static_cast<int>(i % 2);
    const std::array<double, 2> weights{1.0, 3.0};
    const std::uint64_t mask_seed = s.seed + 1;

    auto params = net.parameters();
    auto loss = [&] {
        Rng r(mask_seed);
        return nn::weighted_cross_entropy(net.forward(x, nn::Mode::Train, r).output, labels, weights).loss;
    };
    auto grads = [&] {
        nn::zero_grads(params);
        Rng r(mask_seed);
        auto f = net.forward(x, nn::Mode::Train, r);
        net.backward(f.trace, nn::weighted_cross_entropy(f.output, labels, weights).grad);
        if (s.fault != 0.0)
            for (auto* p : params)
                for (auto& g : p->grad.storage()) g += s.fault;
    };
    nn::GradCheckOptions opt;
    opt.max_coords_per_target = s.coords_per_target;
    opt.seed = s.seed;
    return nn::finite_difference_check(nn::grad_targets(params), loss, grads, opt);
}

inline CheckResult check_gradients(const GradientCheckSetup& s = {}) {
    return detail::timed("WhistleNet gradient check", [=] {
        const auto rep = whistle_net_gradient_report(s);
        return std::pair{rep.passed(), std::to_string(rep.checked) + " coordinates, max rel err " +
                                           detail::sci(rep.max_error) + " (tol 1e-5)"};
    });
}

inline CheckResult check_angle_invariance(std::size_t triples = 1000, std::uint64_t seed = 14) {
    return detail::timed("joint angle invariances", [=] {
        using gesture::Point2;
        Rng rng(seed);
        double worst = 0.0;
        bool antisym = true;
        std::size_t used = 0;
        auto diff = [](double a, double b) { return std::abs(gesture::wrap_angle(a - b)); };
        while (used < triples) {
            const Point2 a{rng.uniform(-100, 100), rng.uniform(-100, 100)};
            const Point2 b{rng.uniform(-100, 100), rng.uniform(-100, 100)};
            const Point2 c{rng.uniform(-100, 100), rng.uniform(-100, 100)};
            if (gesture::norm(a - b) < 1e-3 || gesture::norm(c - b) < 1e-3) continue;
            ++used;
            const double theta = gesture::joint_angle(a, b, c);
            const double rot = rng.uniform(-std::numbers::pi, std::numbers::pi);
            const Point2 pivot{rng.uniform(-50, 50), rng.uniform(-50, 50)};
            auto rotate = [&](Point2 p) {
                const Point2 q = p - pivot;
                return pivot + Point2{std::cos(rot) * q.x - std::sin(rot) * q.y,
                                      std::sin(rot) * q.x + std::cos(rot) * q.y};
            };
            const double s = rng.uniform(0.01, 100.0);
            const Point2 shift{rng.uniform(-500, 500), rng.uniform(-500, 500)};
            worst = std::max(worst, diff(gesture::joint_angle(rotate(a), rotate(b), rotate(c)), theta));
            worst = std::max(worst, diff(gesture::joint_angle(s * a, s * b, s * c), theta));
            worst = std::max(worst, diff(gesture::joint_angle(a + shift, b + shift, c + shift), theta));
            antisym = antisym && gesture::joint_angle(c, b, a) == gesture::wrap_angle(-theta);
        }
        const bool ok = worst <= 1e-9 && antisym;
        return std::pair{ok, std::to_string(triples) + " triples, max deviation " + detail::sci(worst) +
                                 (antisym ? ", antisymmetric" : ", ANTISYMMETRY VIOLATED")};
    });
}

inline CheckResult check_temporal_filter(std::size_t length = 10) {
    return detail::timed("temporal filter enumeration", [=] {
        std::size_t mismatches = 0;
        for (std::uint32_t bits = 0; bits < (1u << length); ++bits) {
            std::vector<bool> seq(length);
            for (std::size_t i = 0; i < length; ++i) seq[i] = bits >> i & 1u;
            const auto expected = brute_force_fires(seq);
            gesture::TemporalFilter f;
            for (std::size_t i = 0; i < length; ++i)
                if (f.step(static_cast<std::int64_t>(i + 1), seq[i]) != expected[i]) ++mismatches;
        }
        return std::pair{mismatches == 0, std::to_string(1u << length) + " sequences, " +
                                              std::to_string(mismatches) + " mismatches"};
    });
}

// Every multiset of up to `max_packets` packets drawn from 4 robots x 2 kinds
// x 4 time classes (before, window start, now, after), for every quorum K.
inline CheckResult check_consensus_enumeration(std::size_t max_robots = 4, std::size_t max_packets = 6) {
    return detail::timed("consensus enumeration", [=] {
        const double now = 5.0, window = 1.0;
        const double times[] = {3.75, 4.0, 5.0, 5.25};
        std::vector<game::DetectionPacket> alphabet;
        for (std::size_t r = 0; r < max_robots; ++r)
            for (auto kind : {game::SignalKind::Gesture, game::SignalKind::Whistle})
                for (double t : times) alphabet.push_back({static_cast<std::uint8_t>(r), kind, 0, t});
        std::size_t cases = 0, mismatches = 0;
        std::vector<game::DetectionPacket> current;
        std::function<void(std::size_t)> rec = [&](std::size_t from) {
            for (std::size_t k = 1; k <= max_robots; ++k) {
                const game::ConsensusPolicy policy{k, window, 15.0};
                for (auto kind : {game::SignalKind::Gesture, game::SignalKind::Whistle}) {
                    ++cases;
                    if (game::consensus_check(current, kind, policy, now) !=
                        consensus_oracle(current, kind, k, window, now))
                        ++mismatches;
                }
            }
            if (current.size() == max_packets) return;
            for (std::size_t i = from; i < alphabet.size(); ++i) {
                current.push_back(alphabet[i]);
                rec(i);
                current.pop_back();
            }
        };
        rec(0);
        return std::pair{mismatches == 0,
                         std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
    });
}

inline std::vector<CheckResult> run_selfcheck(double gradient_fault = 0.0) {
    std::vector<CheckResult> out;
    out.push_back(check_parameter_count());
    out.push_back(check_stft_against_dft());
    out.push_back(check_conv_against_double_sum());
    GradientCheckSetup g;
    g.fault = gradient_fault;
    out.push_back(check_gradients(g));
    out.push_back(check_angle_invariance());
    out.push_back(check_temporal_filter());
    out.push_back(check_consensus_enumeration());
    return out;
}

inline void render_checklist(std::ostream& os, const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        os << (r.passed ? "[PASS] " : "[FAIL] ") << std::left << std::setw(40) << r.name << r.detail << "  ("
           << std::fixed << std::setprecision(2) << r.seconds << " s)\n"
           << std::defaultfloat;
}

}  // namespace refsig::verify
