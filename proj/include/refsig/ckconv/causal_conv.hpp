#pragma once

#include <algorithm>
#include <cstddef>

#include "refsig/nn/layers.hpp"
#include "refsig/nn/tensor.hpp"

namespace refsig::ckconv {

using nn::Tensor;

namespace detail {

inline void check_conv_shapes(const nn::Shape& x, const nn::Shape& kernel) {
    if (x.size() != 3 || kernel.size() != 3 || x[1] != kernel[2])
        throw ShapeError("causal_conv: input " + nn::to_string(x) + " incompatible with kernel " +
                         nn::to_string(kernel) + " (expected [batch, n_in, L] and [K, n_out, n_in])");
}

}  // namespace detail

// y[b, o, t] = sum_c sum_{d=0}^{min(t, K-1)} x[b, c, t-d] * kernel[d, o, c]
// Left-padded causal convolution; the output keeps the input length. Each
// lag contributes one [n_out x n_in] by [n_in x (L-d)] product.
template <class T>
Tensor<T> causal_conv(const Tensor<T>& x, const Tensor<T>& kernel) {
    detail::check_conv_shapes(x.shape(), kernel.shape());
    const auto batch = x.dim(0);
    const auto n_in = static_cast<Eigen::Index>(x.dim(1));
    const auto L = static_cast<Eigen::Index>(x.dim(2));
    const auto K = static_cast<Eigen::Index>(kernel.dim(0));
    const auto n_out = static_cast<Eigen::Index>(kernel.dim(1));
    const auto lags = std::min(K, L);

    Tensor<T> y({batch, kernel.dim(1), x.dim(2)});
    for (std::size_t b = 0; b < batch; ++b) {
        nn::ConstMatrixMap<T> X(x.data() + b * n_in * L, n_in, L);
        nn::MatrixMap<T> Y(y.data() + b * n_out * L, n_out, L);
        for (Eigen::Index d = 0; d < lags; ++d) {
            nn::ConstMatrixMap<T> W(kernel.data() + d * n_out * n_in, n_out, n_in);
            Y.rightCols(L - d).noalias() += W * X.leftCols(L - d);
        }
    }
    return y;
}

template <class T>
struct ConvGrads {
    Tensor<T> dx;
    Tensor<T> dkernel;
};

template <class T>
ConvGrads<T> causal_conv_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy) {
    detail::check_conv_shapes(x.shape(), kernel.shape());
    const auto batch = x.dim(0);
    const auto n_in = static_cast<Eigen::Index>(x.dim(1));
    const auto L = static_cast<Eigen::Index>(x.dim(2));
    const auto K = static_cast<Eigen::Index>(kernel.dim(0));
    const auto n_out = static_cast<Eigen::Index>(kernel.dim(1));
    if (dy.rank() != 3 || dy.dim(0) != batch || static_cast<Eigen::Index>(dy.dim(1)) != n_out ||
        static_cast<Eigen::Index>(dy.dim(2)) != L)
        throw ShapeError("causal_conv backward: grad " + nn::to_string(dy.shape()));
    const auto lags = std::min(K, L);

    ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(kernel.shape())};
    for (std::size_t b = 0; b < batch; ++b) {
        nn::ConstMatrixMap<T> X(x.data() + b * n_in * L, n_in, L);
        nn::ConstMatrixMap<T> dY(dy.data() + b * n_out * L, n_out, L);
        nn::MatrixMap<T> dX(g.dx.data() + b * n_in * L, n_in, L);
        for (Eigen::Index d = 0; d < lags; ++d) {
            nn::ConstMatrixMap<T> W(kernel.data() + d * n_out * n_in, n_out, n_in);
            nn::MatrixMap<T> dW(g.dkernel.data() + d * n_out * n_in, n_out, n_in);
            dX.leftCols(L - d).noalias() += W.transpose() * dY.rightCols(L - d);
            dW.noalias() += dY.rightCols(L - d) * X.leftCols(L - d).transpose();
        }
    }
    return g;
}

}  // namespace refsig::ckconv
