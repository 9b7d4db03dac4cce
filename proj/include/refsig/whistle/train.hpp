#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "refsig/ckconv/whistle_net.hpp"
#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/nn/adam.hpp"
#include "refsig/nn/fpenv.hpp"
#include "refsig/whistle/dataset.hpp"
#include "refsig/whistle/metrics.hpp"

namespace refsig::whistle {

using Net = ckconv::WhistleNet<double>;

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 5;
    std::size_t batch = 32;
    // Defaults to weights inversely proportional to class frequency.
    std::optional<std::array<double, 2>> class_weights;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    bool fit_standardization = true;
    // Anneal the step size from lr to 0 along a half cosine over all steps.
    bool cosine_decay = false;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    EvalReport val;
};

struct TrainingLog {
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0;
    std::array<double, 2> class_weights{1.0, 1.0};
};

// Stacks frames into a [batch, bins] tensor.
template <class T = double>
nn::Tensor<T> frames_tensor(const DatasetSpec& ds, std::span<const std::size_t> indices) {
    const std::size_t bins = ds.samples[indices.front()].frame.bins.size();
    nn::Tensor<T> x({indices.size(), bins});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& b = ds.samples[indices[r]].frame.bins;
        for (std::size_t k = 0; k < bins; ++k) x[r * bins + k] = static_cast<T>(b[k]);
    }
    return x;
}

inline std::array<double, 2> inverse_frequency_weights(const DatasetSpec& ds, const std::vector<std::size_t>& idx) {
    std::array<double, 2> counts{0.0, 0.0};
    for (auto i : idx) counts[static_cast<std::size_t>(ds.samples[i].label)] += 1.0;
    const double n = counts[0] + counts[1];
    std::array<double, 2> w{1.0, 1.0};
    for (std::size_t c = 0; c < 2; ++c)
        if (counts[c] > 0.0) w[c] = n / (2.0 * counts[c]);
    return w;
}

// Softmax probability of the whistle class for every frame in `frames`.
template <class T>
std::vector<double> predict_probabilities(ckconv::WhistleNet<T>& net, const nn::Tensor<T>& frames,
                                          std::size_t batch = 64) {
    nn::DenormalGuard guard;
    const std::size_t n = frames.dim(0), bins = frames.dim(1);
    std::vector<double> probs;
    probs.reserve(n);
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t m = std::min(batch, n - start);
        nn::Tensor<T> x({m, bins});
        std::copy_n(frames.data() + start * bins, m * bins, x.data());
        const auto logits = net.logits(x);
        for (std::size_t r = 0; r < m; ++r) probs.push_back(nn::softmax_row(logits.data() + r * 2, 2)[1]);
    }
    return probs;
}

inline EvalReport evaluate_probabilities(std::span<const double> probs, std::span<const int> labels, double threshold) {
    Confusion c;
    for (std::size_t i = 0; i < probs.size(); ++i) c.add(probs[i] >= threshold, labels[i] == 1);
    return report_from_confusion(c, threshold);
}

// Window-level metrics at `threshold` on the whistle-class probability.
template <class T>
EvalReport evaluate(ckconv::WhistleNet<T>& net, const DatasetSpec& ds, const std::vector<std::size_t>& indices,
                           double threshold = 0.5) {
    if (indices.empty()) throw ArgumentError("evaluate: empty split");
    const auto probs = predict_probabilities(net, frames_tensor<T>(ds, indices));
    std::vector<int> labels;
    for (auto i : indices) labels.push_back(static_cast<int>(ds.samples[i].label));
    return evaluate_probabilities(probs, labels, threshold);
}

// Minimizes class-weighted cross-entropy with Adam. The network is left
// holding the parameters of the epoch with the best validation F1.
template <class T>
TrainingLog train(ckconv::WhistleNet<T>& net, const DatasetSpec& ds, const TrainConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
    if (ds.train.empty()) throw ArgumentError("train: empty training split");
    bool has[2] = {false, false};
    for (auto i : ds.train) has[static_cast<int>(ds.samples[i].label)] = true;
    if (!has[0] || !has[1]) throw ArgumentError("train: training split must contain both classes");
    if (cfg.batch == 0) throw ArgumentError("train: batch size must be positive");
    nn::DenormalGuard guard;

    if (cfg.fit_standardization) {
        const auto st = fit_standardization(ds, ds.train);
        net.input_mean.assign(st.mean.begin(), st.mean.end());
        net.input_std.assign(st.stddev.begin(), st.stddev.end());
    }

    TrainingLog log;
    log.class_weights = cfg.class_weights.value_or(inverse_frequency_weights(ds, ds.train));
    Rng rng(cfg.seed);
    auto params = net.parameters();
    nn::zero_grads(params);
    nn::Adam<T> opt(params, {.lr = cfg.lr});
    std::vector<std::size_t> order = ds.train;
    std::optional<std::vector<nn::NamedTensor>> best;
    double best_f1 = -1.0;
    const std::size_t steps_per_epoch = (order.size() + cfg.batch - 1) / cfg.batch;
    const double total_steps = static_cast<double>(steps_per_epoch * cfg.epochs);
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t m = std::min(cfg.batch, order.size() - start);
            if (m < 2) continue;  // a single window cannot feed batch statistics meaningfully
            std::span<const std::size_t> idx(order.data() + start, m);
            const auto x = frames_tensor<T>(ds, idx);
            std::vector<int> labels(m);
            for (std::size_t r = 0; r < m; ++r) labels[r] = static_cast<int>(ds.samples[idx[r]].label);

            auto fwd = net.forward(x, nn::Mode::Train, rng);
            auto loss = nn::weighted_cross_entropy(fwd.output, labels, log.class_weights);
            if (!std::isfinite(loss.loss))
                throw DivergenceError("train: loss became non-finite in epoch " + std::to_string(epoch) +
                                      " at batch " + std::to_string(batches));
            net.backward(fwd.trace, loss.grad);
            if (cfg.cosine_decay)
                opt.set_lr(0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps)));
            ++step;
            opt.step();
            loss_sum += loss.loss;
            ++batches;
        }

        EpochLog el;
        el.epoch = epoch;
        el.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
        const auto& selection = ds.val.empty() ? ds.train : ds.val;
        el.val = evaluate(net, ds, selection, cfg.threshold);
        if (el.val.f1 > best_f1) {
            best_f1 = el.val.f1;
            best = net.to_records();
            log.best_epoch = epoch;
        }
        log.epochs.push_back(el);
        if (on_epoch) on_epoch(el);
    }
    if (best) net.load_records(*best);
    return log;
}

}  // namespace refsig::whistle
