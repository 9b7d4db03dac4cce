#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "refsig/common/random.hpp"
#include "refsig/nn/tensor.hpp"

namespace refsig::nn {

// A block of coordinates to perturb together with its analytic gradient.
struct GradTarget {
    std::string name;
    std::span<double> values;
    std::span<const double> grads;
};

struct GradCheckOptions {
    double eps = 1e-5;
    double tolerance = 1e-5;
    // Targets larger than this are sampled instead of checked exhaustively.
    std::size_t max_coords_per_target = 32;
    std::size_t worst_count = 5;
    std::uint64_t seed = 0;
};

struct GradCheckEntry {
    std::string name;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double error = 0.0;
};

struct GradCheckReport {
    double max_error = 0.0;
    double tolerance = 0.0;
    std::size_t checked = 0;
    std::vector<GradCheckEntry> worst;

    bool passed() const { return checked > 0 && max_error <= tolerance; }
};

inline std::ostream& operator<<(std::ostream& os, const GradCheckReport& r) {
    os << (r.passed() ? "PASS" : "FAIL") << " gradient check: " << r.checked << " coordinates, max error "
       << std::scientific << std::setprecision(3) << r.max_error << " (tolerance " << r.tolerance << ")\n";
    for (const auto& e : r.worst)
        os << "  " << e.name << '[' << e.index << "] analytic=" << e.analytic << " numeric=" << e.numeric
           << " err=" << e.error << '\n';
    os << std::defaultfloat;
    return os;
}

// Compares analytic gradients with central differences.
//   error = |analytic - numeric| / max(1, |analytic|, |numeric|)
// `compute_grads` must refresh every target's gradient span for the current
// values; `loss` evaluates the scalar objective without touching gradients.
inline GradCheckReport finite_difference_check(const std::vector<GradTarget>& targets,
                                               const std::function<double()>& loss,
                                               const std::function<void()>& compute_grads,
                                               const GradCheckOptions& opt = {}) {
    compute_grads();
    struct Pick {
        std::size_t target;
        std::size_t index;
        double analytic;
    };
    Rng rng(opt.seed);
    std::vector<Pick> picks;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto n = targets[t].values.size();
        if (n <= opt.max_coords_per_target) {
            for (std::size_t i = 0; i < n; ++i) picks.push_back({t, i, targets[t].grads[i]});
        } else {
            for (std::size_t k = 0; k < opt.max_coords_per_target; ++k) {
                const auto i = static_cast<std::size_t>(rng.below(n));
                picks.push_back({t, i, targets[t].grads[i]});
            }
        }
    }

    GradCheckReport report;
    report.tolerance = opt.tolerance;
    std::vector<GradCheckEntry> all;
    all.reserve(picks.size());
    for (const auto& pick : picks) {
        double& v = targets[pick.target].values[pick.index];
        const double saved = v;
        v = saved + opt.eps;
        const double up = loss();
        v = saved - opt.eps;
        const double down = loss();
        v = saved;
        const double numeric = (up - down) / (2.0 * opt.eps);
        const double scale = std::max({1.0, std::abs(pick.analytic), std::abs(numeric)});
        double err = std::abs(pick.analytic - numeric) / scale;
        if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
        all.push_back({targets[pick.target].name, pick.index, pick.analytic, numeric, err});
        report.max_error = std::max(report.max_error, err);
    }
    report.checked = all.size();
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.error > b.error; });
    all.resize(std::min(all.size(), opt.worst_count));
    report.worst = std::move(all);
    return report;
}

inline std::vector<GradTarget> grad_targets(const ParameterRefs<double>& params) {
    std::vector<GradTarget> targets;
    for (auto* p : params) targets.push_back({p->name, p->value.values(), p->grad.values()});
    return targets;
}

}  // namespace refsig::nn
