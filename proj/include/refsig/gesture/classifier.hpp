#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/gesture/angles.hpp"
#include "refsig/nn/adam.hpp"
#include "refsig/nn/checkpoint.hpp"
#include "refsig/nn/layers.hpp"

namespace refsig::gesture {

enum class PoseLabel : int { Other = 0, HandsRaised = 1 };

struct PoseDecision {
    PoseLabel label = PoseLabel::Other;
    double confidence = 0.0;
};

// Reference decider: both upper arms near vertical above the shoulder
// (|hip-shoulder-elbow| > 3pi/4) and both elbows within pi/4 of straight
// (|shoulder-elbow-wrist| > 3pi/4).
struct RulePoseClassifier {
    double limit = 0.75 * std::numbers::pi;

    PoseDecision classify(const AngleFeatures& f) const {
        if (!f.valid) throw PreconditionError("classify_pose: features are not valid");
        const bool raised = std::abs(f.left_hse) > limit && std::abs(f.right_hse) > limit &&
                            std::abs(f.left_sew) > limit && std::abs(f.right_sew) > limit;
        return {raised ? PoseLabel::HandsRaised : PoseLabel::Other, 1.0};
    }
};

struct LabeledFeatures {
    AngleFeatures features;
    PoseLabel label = PoseLabel::Other;
};

struct PoseTrainConfig {
    double lr = 1e-2;
    std::size_t epochs = 200;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
};

// 4 angles -> 16 hidden (GELU) -> 2 logits. Angles are divided by pi on input.
class PoseClassifier {
public:
    static constexpr std::size_t kHidden = 16;

    PoseClassifier() : fc1("pose.fc1", 4, kHidden), fc2("pose.fc2", kHidden, 2) {}

    nn::Linear<double> fc1;
    nn::Linear<double> fc2;

    void init(Rng& rng) {
        fc1.init(rng);
        fc2.init(rng);
    }

    nn::ParameterRefs<double> parameters() {
        nn::ParameterRefs<double> out;
        fc1.collect(out);
        fc2.collect(out);
        return out;
    }

    nn::Tensor<double> logits(const nn::Tensor<double>& x) const {
        auto h = fc1.forward(x);
        auto a = nn::gelu(std::move(h.output));
        return fc2.forward(std::move(a.output)).output;
    }

    PoseDecision classify(const AngleFeatures& f) const {
        if (!f.valid) throw PreconditionError("classify_pose: features are not valid");
        const auto logit = logits(encode({&f, 1}));
        const auto p = nn::softmax_row(logit.data(), 2);
        return p[1] >= 0.5 ? PoseDecision{PoseLabel::HandsRaised, p[1]} : PoseDecision{PoseLabel::Other, p[0]};
    }

    // Mean cross-entropy after each epoch.
    std::vector<double> train(std::span<const LabeledFeatures> data, const PoseTrainConfig& cfg) {
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i].features.valid) order.push_back(i);
        if (order.empty()) throw ArgumentError("pose classifier: no valid training samples");
        Rng rng(cfg.seed);
        auto params = parameters();
        nn::zero_grads(params);
        nn::Adam<double> opt(params, {.lr = cfg.lr});
        const std::array<double, 2> weights{1.0, 1.0};
        std::vector<double> history;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order.begin(), order.end());
            double sum = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
                const std::size_t m = std::min(cfg.batch, order.size() - start);
                std::vector<AngleFeatures> feats;
                std::vector<int> labels;
                for (std::size_t r = 0; r < m; ++r) {
                    feats.push_back(data[order[start + r]].features);
                    labels.push_back(static_cast<int>(data[order[start + r]].label));
                }
                auto h = fc1.forward(encode(feats));
                auto a = nn::gelu(std::move(h.output));
                auto z = fc2.forward(std::move(a.output));
                auto loss = nn::weighted_cross_entropy(z.output, labels, weights);
                auto g = fc2.backward(z.trace, loss.grad);
                g = nn::gelu_backward(a.trace, g);
                fc1.backward(h.trace, g);
                opt.step();
                sum += loss.loss;
                ++batches;
            }
            history.push_back(sum / static_cast<double>(batches));
        }
        return history;
    }

    std::vector<nn::NamedTensor> to_records() {
        std::vector<nn::NamedTensor> out;
        for (auto* p : parameters()) out.emplace_back(p->name, p->value);
        return out;
    }

    void load_records(const std::vector<nn::NamedTensor>& records) {
        for (auto* p : parameters()) {
            const auto& t = nn::find_record(records, p->name);
            if (t.shape() != p->value.shape()) throw FormatError("checkpoint: shape mismatch for " + p->name);
            p->value = t;
        }
    }

    static nn::Tensor<double> encode(std::span<const AngleFeatures> feats) {
        nn::Tensor<double> x({feats.size(), 4});
        for (std::size_t r = 0; r < feats.size(); ++r) {
            const auto a = feats[r].as_array();
            for (std::size_t k = 0; k < 4; ++k) x[r * 4 + k] = a[k] / std::numbers::pi;
        }
        return x;
    }
};

template <class Model>
PoseDecision classify_pose(const AngleFeatures& features, const Model& model) {
    return model.classify(features);
}

}  // namespace refsig::gesture
