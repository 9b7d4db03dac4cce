#pragma once

#include <string>

#include "refsig/ckconv/causal_conv.hpp"
#include "refsig/ckconv/continuous_kernel.hpp"

namespace refsig::ckconv {

template <class T>
struct CkConvTrace {
    KernelTrace<T> kernel_trace;
    Tensor<T> kernel;
    Tensor<T> input;
};

// Causal convolution whose kernel is generated by a ContinuousKernel. The
// kernel is materialized once per forward call.
template <class T>
class CkConvLayer {
public:
    CkConvLayer() = default;
    CkConvLayer(const std::string& name, std::size_t n_in, std::size_t n_out, std::size_t kernel_size,
                KernelActivation activation = KernelActivation::Gelu,
                std::size_t kernel_hidden = ContinuousKernel<T>::kHidden)
        : kernel(name + ".kernel_mlp", n_in, n_out, kernel_size, activation, kernel_hidden) {}

    ContinuousKernel<T> kernel;

    std::size_t n_in() const { return kernel.n_in(); }
    std::size_t n_out() const { return kernel.n_out(); }

    void init(Rng& rng) { kernel.init(rng); }

    Forward<T, CkConvTrace<T>> forward(Tensor<T> x) const {
        auto k = kernel.materialize();
        auto y = causal_conv(x, k.output);
        return {std::move(y), {std::move(k.trace), std::move(k.output), std::move(x)}};
    }

    Tensor<T> backward(const CkConvTrace<T>& tr, const Tensor<T>& dy) {
        auto g = causal_conv_backward(tr.input, tr.kernel, dy);
        kernel.backward(tr.kernel_trace, g.dkernel);
        return std::move(g.dx);
    }

    void collect(ParameterRefs<T>& out) { kernel.collect(out); }
};

}  // namespace refsig::ckconv
