#pragma once

#include <optional>
#include <string>

#include "refsig/ckconv/ckconv_layer.hpp"
#include "refsig/nn/layers.hpp"

namespace refsig::ckconv {

struct CkBlockConfig {
    std::size_t n_in = 32;
    std::size_t n_out = 32;
    std::size_t kernel_size = 31;
    std::size_t kernel_hidden = 16;
    double dropout = 0.1;
    KernelActivation kernel_activation = KernelActivation::Gelu;
};

template <class T>
struct CkBlockTrace {
    nn::BatchNormTrace<T> bn;
    CkConvTrace<T> conv;
    nn::GeluTrace<T> act1;
    nn::DropoutTrace<T> drop;
    nn::LinearTrace<T> linear;
    nn::GeluTrace<T> act2;
    std::optional<nn::LinearTrace<T>> residual;
};

// input -> BatchNorm -> CKConv -> GELU -> Dropout -> Linear -> GELU -> (+ skip)
// The skip is the identity, or a 1x1 channel map when n_in != n_out.
template <class T>
class CkBlock {
public:
    CkBlock() = default;
    CkBlock(const std::string& name, const CkBlockConfig& cfg)
        : bn(name + ".bn", cfg.n_in),
          conv(name + ".ckconv", cfg.n_in, cfg.n_out, cfg.kernel_size, cfg.kernel_activation, cfg.kernel_hidden),
          linear(name + ".linear", cfg.n_out, cfg.n_out),
          dropout_p(cfg.dropout) {
        if (cfg.n_in != cfg.n_out) residual.emplace(name + ".residual", cfg.n_in, cfg.n_out);
    }

    nn::BatchNorm1d<T> bn;
    CkConvLayer<T> conv;
    nn::ChannelLinear<T> linear;
    std::optional<nn::ChannelLinear<T>> residual;
    double dropout_p = 0.1;

    std::size_t n_in() const { return conv.n_in(); }
    std::size_t n_out() const { return conv.n_out(); }

    void init(Rng& rng) {
        conv.init(rng);
        linear.init(rng);
        if (residual) residual->init(rng);
    }

    Forward<T, CkBlockTrace<T>> forward(const Tensor<T>& x, nn::Mode mode, Rng& rng) {
        if (x.rank() != 3 || x.dim(1) != n_in())
            throw ShapeError("ckblock: input " + nn::to_string(x.shape()) + " but block expects " +
                             std::to_string(n_in()) + " channels");
        CkBlockTrace<T> tr;
        auto a = bn.forward(x, mode);
        tr.bn = std::move(a.trace);
        auto c = conv.forward(std::move(a.output));
        tr.conv = std::move(c.trace);
        auto g1 = nn::gelu(std::move(c.output));
        tr.act1 = std::move(g1.trace);
        auto d = nn::dropout(std::move(g1.output), dropout_p, mode, rng);
        tr.drop = std::move(d.trace);
        auto l = linear.forward(std::move(d.output));
        tr.linear = std::move(l.trace);
        auto h = nn::gelu(std::move(l.output));
        tr.act2 = std::move(h.trace);

        Tensor<T> out = std::move(h.output);
        if (residual) {
            auto r = residual->forward(x);
            tr.residual = std::move(r.trace);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += r.output[i];
        } else {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
        }
        nn::debug_check_finite(out, "ckblock");
        return {std::move(out), std::move(tr)};
    }

    Tensor<T> backward(const CkBlockTrace<T>& tr, const Tensor<T>& dout) {
        auto g = nn::gelu_backward(tr.act2, dout);
        g = linear.backward(tr.linear, g);
        g = nn::dropout_backward(tr.drop, g);
        g = nn::gelu_backward(tr.act1, g);
        g = conv.backward(tr.conv, g);
        auto dx = bn.backward(tr.bn, g);
        if (residual) {
            auto dr = residual->backward(*tr.residual, dout);
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dr[i];
        } else {
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i];
        }
        return dx;
    }

    void collect(ParameterRefs<T>& out) {
        bn.collect(out);
        conv.collect(out);
        linear.collect(out);
        if (residual) residual->collect(out);
    }
};

}  // namespace refsig::ckconv
