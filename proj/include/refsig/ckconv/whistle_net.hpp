#pragma once

#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "refsig/ckconv/ckblock.hpp"
#include "refsig/nn/checkpoint.hpp"
#include "refsig/nn/layers.hpp"

namespace refsig::ckconv {

struct WhistleNetConfig {
    std::size_t bins = 513;
    std::size_t blocks = 4;
    std::size_t hidden = 32;
    std::size_t kernel_hidden = 16;
    std::size_t kernel_size = 31;
    std::size_t head_hidden = 16;
    std::size_t classes = 2;
    double dropout = 0.1;
    KernelActivation kernel_activation = KernelActivation::Gelu;
};

template <class T>
struct WhistleNetTrace {
    std::vector<CkBlockTrace<T>> blocks;
    std::size_t length = 0;
    nn::LinearTrace<T> fc1;
    nn::GeluTrace<T> act;
    nn::LinearTrace<T> fc2;
};

// Four CKBlocks over the frequency axis of a single spectral frame, global
// average pooling, then Linear -> GELU -> Linear to two logits
// {no-whistle, whistle}. Inputs are standardized per bin first.
template <class T>
class WhistleNet {
public:
    WhistleNet() : WhistleNet(WhistleNetConfig{}) {}

    explicit WhistleNet(const WhistleNetConfig& cfg)
        : fc1("head.fc1", cfg.hidden, cfg.head_hidden),
          fc2("head.fc2", cfg.head_hidden, cfg.classes),
          input_mean(cfg.bins, T{0}),
          input_std(cfg.bins, T{1}),
          config_(cfg) {
        for (std::size_t i = 0; i < cfg.blocks; ++i) {
            CkBlockConfig bc;
            bc.n_in = i == 0 ? 1 : cfg.hidden;
            bc.n_out = cfg.hidden;
            bc.kernel_size = cfg.kernel_size;
            bc.kernel_hidden = cfg.kernel_hidden;
            bc.dropout = cfg.dropout;
            bc.kernel_activation = cfg.kernel_activation;
            blocks.emplace_back("block" + std::to_string(i + 1), bc);
        }
    }

    std::vector<CkBlock<T>> blocks;
    nn::Linear<T> fc1;
    nn::Linear<T> fc2;
    std::vector<T> input_mean;
    std::vector<T> input_std;

    const WhistleNetConfig& config() const { return config_; }

    void init(Rng& rng) {
        for (auto& b : blocks) b.init(rng);
        fc1.init(rng);
        fc2.init(rng);
    }

    ParameterRefs<T> parameters() {
        ParameterRefs<T> out;
        for (auto& b : blocks) b.collect(out);
        fc1.collect(out);
        fc2.collect(out);
        return out;
    }

    std::size_t parameter_count() { return nn::total_parameter_count(parameters()); }

    // x: [batch, bins] or [batch, 1, bins]. Returns logits [batch, classes].
    Forward<T, WhistleNetTrace<T>> forward(const Tensor<T>& x, nn::Mode mode, Rng& rng) {
        const std::size_t bins = config_.bins;
        if (!((x.rank() == 2 && x.dim(1) == bins) || (x.rank() == 3 && x.dim(1) == 1 && x.dim(2) == bins)))
            throw ShapeError("whistlenet: input " + nn::to_string(x.shape()) + " must carry " +
                             std::to_string(bins) + " bins");
        const std::size_t batch = x.dim(0);
        Tensor<T> h({batch, 1, bins});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t k = 0; k < bins; ++k)
                h[b * bins + k] = (x[b * bins + k] - input_mean[k]) / input_std[k];

        WhistleNetTrace<T> tr;
        tr.length = bins;
        tr.blocks.reserve(blocks.size());
        for (auto& blk : blocks) {
            auto f = blk.forward(h, mode, rng);
            tr.blocks.push_back(std::move(f.trace));
            h = std::move(f.output);
        }

        const std::size_t C = config_.hidden;
        Tensor<T> pooled({batch, C});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                T acc{0};
                const T* row = h.data() + (b * C + c) * bins;
                for (std::size_t t = 0; t < bins; ++t) acc += row[t];
                pooled[b * C + c] = acc / static_cast<T>(bins);
            }

        auto z1 = fc1.forward(std::move(pooled));
        tr.fc1 = std::move(z1.trace);
        auto a = nn::gelu(std::move(z1.output));
        tr.act = std::move(a.trace);
        auto z2 = fc2.forward(std::move(a.output));
        tr.fc2 = std::move(z2.trace);
        return {std::move(z2.output), std::move(tr)};
    }

    Tensor<T> logits(const Tensor<T>& x) {
        Rng unused(0);
        return forward(x, nn::Mode::Eval, unused).output;
    }

    // Accumulates parameter gradients; returns d(loss)/d(raw input) as [batch, bins].
    Tensor<T> backward(const WhistleNetTrace<T>& tr, const Tensor<T>& dlogits) {
        auto g = fc2.backward(tr.fc2, dlogits);
        g = nn::gelu_backward(tr.act, g);
        g = fc1.backward(tr.fc1, g);

        const std::size_t batch = g.dim(0), C = config_.hidden, L = tr.length;
        Tensor<T> dh({batch, C, L});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const T v = g[b * C + c] / static_cast<T>(L);
                T* row = dh.data() + (b * C + c) * L;
                for (std::size_t t = 0; t < L; ++t) row[t] = v;
            }
        for (std::size_t i = blocks.size(); i-- > 0;) dh = blocks[i].backward(tr.blocks[i], dh);

        Tensor<T> dx({batch, L});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t k = 0; k < L; ++k) dx[b * L + k] = dh[b * L + k] / input_std[k];
        return dx;
    }

    // Parameters followed by buffers (BatchNorm running statistics and the
    // input standardization), all as double.
    std::vector<nn::NamedTensor> to_records() {
        std::vector<nn::NamedTensor> out;
        for (auto* p : parameters()) out.emplace_back(p->name, p->value.template cast<double>());
        for (auto& buf : buffers()) {
            std::vector<double> v(buf.second->begin(), buf.second->end());
            const std::size_t n = v.size();
            out.emplace_back(buf.first, Tensor<double>({n}, std::move(v)));
        }
        return out;
    }

    void load_records(const std::vector<nn::NamedTensor>& records) {
        for (auto* p : parameters()) {
            const auto& t = nn::find_record(records, p->name);
            if (t.shape() != p->value.shape())
                throw FormatError("checkpoint: '" + p->name + "' has shape " + nn::to_string(t.shape()) +
                                  ", network expects " + nn::to_string(p->value.shape()));
            for (std::size_t i = 0; i < t.size(); ++i) p->value[i] = static_cast<T>(t[i]);
        }
        for (auto& buf : buffers()) {
            const auto& t = nn::find_record(records, buf.first);
            if (t.size() != buf.second->size())
                throw FormatError("checkpoint: buffer '" + buf.first + "' has wrong size");
            for (std::size_t i = 0; i < t.size(); ++i) (*buf.second)[i] = static_cast<T>(t[i]);
        }
    }

    template <class U>
    WhistleNet<U> cast() {
        WhistleNet<U> out(config_);
        out.load_records(to_records());
        return out;
    }

    // One line per parameter: name, shape, count, running total.
    void describe(std::ostream& os) {
        std::size_t running = 0;
        for (auto* p : parameters()) {
            running += p->size();
            os << std::left << std::setw(34) << p->name << std::setw(12) << nn::to_string(p->value.shape())
               << std::right << std::setw(8) << p->size() << std::setw(10) << running << '\n';
        }
        os << "total trainable parameters: " << running << '\n';
    }

private:
    std::vector<std::pair<std::string, std::vector<T>*>> buffers() {
        std::vector<std::pair<std::string, std::vector<T>*>> out;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const std::string n = "block" + std::to_string(i + 1) + ".bn";
            out.emplace_back(n + ".running_mean", &blocks[i].bn.running_mean);
            out.emplace_back(n + ".running_var", &blocks[i].bn.running_var);
        }
        out.emplace_back("input.mean", &input_mean);
        out.emplace_back("input.std", &input_std);
        return out;
    }

    WhistleNetConfig config_;
};

// Per-block parameter subtotals for the architecture report.
struct ParameterBreakdown {
    std::vector<std::size_t> blocks;
    std::size_t head = 0;
    std::size_t total = 0;
};

template <class T>
ParameterBreakdown parameter_breakdown(WhistleNet<T>& net) {
    ParameterBreakdown out;
    for (auto& b : net.blocks) {
        ParameterRefs<T> refs;
        b.collect(refs);
        out.blocks.push_back(nn::total_parameter_count(refs));
    }
    ParameterRefs<T> head;
    net.fc1.collect(head);
    net.fc2.collect(head);
    out.head = nn::total_parameter_count(head);
    out.total = net.parameter_count();
    return out;
}

}  // namespace refsig::ckconv
