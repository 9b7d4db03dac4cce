#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "refsig/common/random.hpp"
#include "refsig/nn/layers.hpp"
#include "refsig/nn/tensor.hpp"

namespace refsig::ckconv {

using nn::Forward;
using nn::Parameter;
using nn::ParameterRefs;
using nn::Tensor;

enum class KernelActivation { Gelu, Sine };

// Relative lag d in {0, ..., K-1} mapped affinely onto [-1, 1].
inline std::vector<double> kernel_positions(std::size_t kernel_size) {
    std::vector<double> pos(kernel_size, 0.0);
    if (kernel_size == 1) return pos;
    for (std::size_t k = 0; k < kernel_size; ++k)
        pos[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(kernel_size - 1);
    return pos;
}

template <class T>
struct KernelTrace {
    nn::LinearTrace<T> l1, l2, l3;
    nn::GeluTrace<T> a1, a2;
};

// Kernel generator: a 3-affine-layer perceptron R -> R^{n_out x n_in}
// evaluated at each of the K relative positions.
template <class T>
class ContinuousKernel {
public:
    static constexpr std::size_t kHidden = 16;

    ContinuousKernel() = default;
    ContinuousKernel(const std::string& name, std::size_t n_in, std::size_t n_out, std::size_t kernel_size,
                     KernelActivation activation = KernelActivation::Gelu, std::size_t hidden = kHidden)
        : mlp_w1(name + ".w1", Tensor<T>({hidden, 1})),
          mlp_b1(name + ".b1", Tensor<T>({hidden})),
          mlp_w2(name + ".w2", Tensor<T>({hidden, hidden})),
          mlp_b2(name + ".b2", Tensor<T>({hidden})),
          mlp_w3(name + ".w3", Tensor<T>({n_out * n_in, hidden})),
          mlp_b3(name + ".b3", Tensor<T>({n_out * n_in})),
          activation_(activation),
          n_in_(n_in),
          n_out_(n_out),
          kernel_size_(kernel_size) {
        const auto pos = kernel_positions(kernel_size);
        positions_ = Tensor<T>({kernel_size, 1});
        for (std::size_t k = 0; k < kernel_size; ++k) positions_[k] = static_cast<T>(pos[k]);
    }

    Parameter<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2, mlp_w3, mlp_b3;

    std::size_t kernel_size() const { return kernel_size_; }
    std::size_t n_in() const { return n_in_; }
    std::size_t n_out() const { return n_out_; }
    KernelActivation activation() const { return activation_; }
    const Tensor<T>& positions() const { return positions_; }

    void init(Rng& rng) {
        nn::init_uniform_fan_in(mlp_w1.value, 1, rng);
        nn::init_uniform_fan_in(mlp_w2.value, mlp_w2.value.dim(1), rng);
        nn::init_uniform_fan_in(mlp_w3.value, mlp_w3.value.dim(1), rng);
        mlp_b1.value.fill(T{0});
        mlp_b2.value.fill(T{0});
        mlp_b3.value.fill(T{0});
    }

    // Returns the kernel as [K, n_out, n_in].
    Forward<T, KernelTrace<T>> materialize() const {
        KernelTrace<T> tr;
        auto h1 = nn::linear_forward(positions_, mlp_w1, mlp_b1);
        tr.l1 = std::move(h1.trace);
        auto a1 = activate(std::move(h1.output));
        tr.a1 = std::move(a1.trace);
        auto h2 = nn::linear_forward(std::move(a1.output), mlp_w2, mlp_b2);
        tr.l2 = std::move(h2.trace);
        auto a2 = activate(std::move(h2.output));
        tr.a2 = std::move(a2.trace);
        auto out = nn::linear_forward(std::move(a2.output), mlp_w3, mlp_b3);
        tr.l3 = std::move(out.trace);
        return {std::move(out.output).reshaped({kernel_size_, n_out_, n_in_}), std::move(tr)};
    }

    void backward(const KernelTrace<T>& tr, const Tensor<T>& dkernel) {
        auto g = nn::linear_backward(tr.l3, mlp_w3, mlp_b3, dkernel.reshaped({kernel_size_, n_out_ * n_in_}));
        g = activate_backward(tr.a2, g);
        g = nn::linear_backward(tr.l2, mlp_w2, mlp_b2, g);
        g = activate_backward(tr.a1, g);
        nn::linear_backward(tr.l1, mlp_w1, mlp_b1, g);
    }

    void collect(ParameterRefs<T>& out) {
        for (auto* p : {&mlp_w1, &mlp_b1, &mlp_w2, &mlp_b2, &mlp_w3, &mlp_b3}) out.push_back(p);
    }

private:
    Forward<T, nn::GeluTrace<T>> activate(Tensor<T> x) const {
        return activation_ == KernelActivation::Sine ? nn::sine(std::move(x)) : nn::gelu(std::move(x));
    }
    Tensor<T> activate_backward(const nn::GeluTrace<T>& tr, const Tensor<T>& dy) const {
        return activation_ == KernelActivation::Sine ? nn::sine_backward(tr, dy) : nn::gelu_backward(tr, dy);
    }

    KernelActivation activation_ = KernelActivation::Gelu;
    std::size_t n_in_ = 0;
    std::size_t n_out_ = 0;
    std::size_t kernel_size_ = 0;
    Tensor<T> positions_;
};

}  // namespace refsig::ckconv
