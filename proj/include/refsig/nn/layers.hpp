#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/SpecialFunctions>

#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/nn/tensor.hpp"

namespace refsig::nn {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <class T>
using VectorMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <class T>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <class T, class Trace>
struct Forward {
    Tensor<T> output;
    Trace trace;
};

// Weights ~ Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)).
template <class T>
inline void init_uniform_fan_in(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------
// Linear: y = x w^T + b over the trailing extent of x.

template <class T>
struct LinearTrace {
    Tensor<T> input;
};

template <class T>
Forward<T, LinearTrace<T>> linear_forward(Tensor<T> x, const Parameter<T>& w, const Parameter<T>& b) {
    const std::size_t out = w.value.dim(0);
    const std::size_t in = w.value.dim(1);
    if (x.rank() == 0 || x.shape().back() != in)
        throw ShapeError("linear: input " + to_string(x.shape()) + " incompatible with weight " +
                         to_string(w.value.shape()));
    if (b.value.size() != out) throw ShapeError("linear: bias " + to_string(b.value.shape()) + " vs out " +
                                                std::to_string(out));
    const std::size_t rows = x.size() / in;
    Shape shape = x.shape();
    shape.back() = out;
    Tensor<T> y(shape);
    ConstMatrixMap<T> X(x.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
    ConstMatrixMap<T> W(w.value.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    MatrixMap<T> Y(y.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
    Y.noalias() = X * W.transpose();
    Y.rowwise() += ConstVectorMap<T>(b.value.data(), static_cast<Eigen::Index>(out)).transpose();
    debug_check_finite(y, "linear");
    return {std::move(y), {std::move(x)}};
}

template <class T>
Tensor<T> linear_backward(const LinearTrace<T>& trace, Parameter<T>& w, Parameter<T>& b, const Tensor<T>& dy) {
    const std::size_t out = w.value.dim(0);
    const std::size_t in = w.value.dim(1);
    const std::size_t rows = trace.input.size() / in;
    if (dy.size() != rows * out) throw ShapeError("linear backward: grad " + to_string(dy.shape()));
    ConstMatrixMap<T> X(trace.input.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
    ConstMatrixMap<T> W(w.value.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    ConstMatrixMap<T> dY(dy.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
    MatrixMap<T> dW(w.grad.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    dW.noalias() += dY.transpose() * X;
    VectorMap<T>(b.grad.data(), static_cast<Eigen::Index>(out)) += dY.colwise().sum().transpose();
    Tensor<T> dx(trace.input.shape());
    MatrixMap<T> dX(dx.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
    dX.noalias() = dY * W;
    return dx;
}

template <class T>
struct Linear {
    Parameter<T> weight;
    Parameter<T> bias;

    Linear() = default;
    Linear(const std::string& name, std::size_t in, std::size_t out)
        : weight(name + ".weight", Tensor<T>({out, in})), bias(name + ".bias", Tensor<T>({out})) {}

    std::size_t in_features() const { return weight.value.dim(1); }
    std::size_t out_features() const { return weight.value.dim(0); }

    void init(Rng& rng) {
        init_uniform_fan_in(weight.value, in_features(), rng);
        bias.value.fill(T{0});
    }

    Forward<T, LinearTrace<T>> forward(Tensor<T> x) const { return linear_forward(std::move(x), weight, bias); }
    Tensor<T> backward(const LinearTrace<T>& trace, const Tensor<T>& dy) {
        return linear_backward(trace, weight, bias, dy);
    }

    void collect(ParameterRefs<T>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

// ---------------------------------------------------------------------------
// Pointwise channel map over [batch, channels, length]: the same Linear
// applied independently at every sequence position (also a 1x1 convolution).

template <class T>
struct ChannelLinear {
    Parameter<T> weight;
    Parameter<T> bias;

    ChannelLinear() = default;
    ChannelLinear(const std::string& name, std::size_t in, std::size_t out)
        : weight(name + ".weight", Tensor<T>({out, in})), bias(name + ".bias", Tensor<T>({out})) {}

    std::size_t in_channels() const { return weight.value.dim(1); }
    std::size_t out_channels() const { return weight.value.dim(0); }

    void init(Rng& rng) {
        init_uniform_fan_in(weight.value, in_channels(), rng);
        bias.value.fill(T{0});
    }

    Forward<T, LinearTrace<T>> forward(Tensor<T> x) const {
        if (x.rank() != 3 || x.dim(1) != in_channels())
            throw ShapeError("channel linear: input " + to_string(x.shape()) + " vs weight " +
                             to_string(weight.value.shape()));
        const auto batch = x.dim(0), len = x.dim(2);
        const auto in = static_cast<Eigen::Index>(in_channels());
        const auto out = static_cast<Eigen::Index>(out_channels());
        const auto L = static_cast<Eigen::Index>(len);
        Tensor<T> y({batch, out_channels(), len});
        ConstMatrixMap<T> W(weight.value.data(), out, in);
        ConstVectorMap<T> bvec(bias.value.data(), out);
        for (std::size_t b = 0; b < batch; ++b) {
            ConstMatrixMap<T> X(x.data() + b * in * L, in, L);
            MatrixMap<T> Y(y.data() + b * out * L, out, L);
            Y.noalias() = W * X;
            Y.colwise() += bvec;
        }
        return {std::move(y), {std::move(x)}};
    }

    Tensor<T> backward(const LinearTrace<T>& trace, const Tensor<T>& dy) {
        const auto batch = trace.input.dim(0), len = trace.input.dim(2);
        const auto in = static_cast<Eigen::Index>(in_channels());
        const auto out = static_cast<Eigen::Index>(out_channels());
        const auto L = static_cast<Eigen::Index>(len);
        if (dy.size() != batch * out * L) throw ShapeError("channel linear backward: grad " + to_string(dy.shape()));
        ConstMatrixMap<T> W(weight.value.data(), out, in);
        MatrixMap<T> dW(weight.grad.data(), out, in);
        VectorMap<T> db(bias.grad.data(), out);
        Tensor<T> dx(trace.input.shape());
        for (std::size_t b = 0; b < batch; ++b) {
            ConstMatrixMap<T> X(trace.input.data() + b * in * L, in, L);
            ConstMatrixMap<T> dY(dy.data() + b * out * L, out, L);
            dW.noalias() += dY * X.transpose();
            db += dY.rowwise().sum();
            MatrixMap<T>(dx.data() + b * in * L, in, L).noalias() = W.transpose() * dY;
        }
        return dx;
    }

    void collect(ParameterRefs<T>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

// ---------------------------------------------------------------------------
// GELU, exact erf form: 0.5 x (1 + erf(x / sqrt 2)). Evaluated through
// Eigen's array erf, which is vectorized for float.

template <class T>
inline T gelu_scalar(T x) {
    return static_cast<T>(0.5) * x * (static_cast<T>(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
}

template <class T>
inline T gelu_derivative(T x) {
    const T cdf = static_cast<T>(0.5) * (static_cast<T>(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
    const T pdf = std::exp(static_cast<T>(-0.5) * x * x) * static_cast<T>(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    return cdf + x * pdf;
}

template <class T>
struct GeluTrace {
    Tensor<T> input;
};

template <class T>
Forward<T, GeluTrace<T>> gelu(Tensor<T> x) {
    using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
    const auto n = static_cast<Eigen::Index>(x.size());
    Tensor<T> y(x.shape());
    Eigen::Map<const Array> X(x.data(), n);
    Eigen::Map<Array> Y(y.data(), n);
    Y = static_cast<T>(0.5) * X * (static_cast<T>(1) + (X * static_cast<T>(std::numbers::sqrt2 / 2)).erf());
    return {std::move(y), {std::move(x)}};
}

template <class T>
Tensor<T> gelu_backward(const GeluTrace<T>& trace, const Tensor<T>& dy) {
    using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
    const auto n = static_cast<Eigen::Index>(dy.size());
    Tensor<T> dx(trace.input.shape());
    Eigen::Map<const Array> X(trace.input.data(), n);
    Eigen::Map<const Array> dY(dy.data(), n);
    const auto cdf = static_cast<T>(0.5) * (static_cast<T>(1) + (X * static_cast<T>(std::numbers::sqrt2 / 2)).erf());
    const auto pdf = (static_cast<T>(-0.5) * X.square()).exp() *
                     static_cast<T>(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    Eigen::Map<Array>(dx.data(), n) = dY * (cdf + X * pdf);
    return dx;
}

// ---------------------------------------------------------------------------
// Sine activation, offered as the alternative kernel-perceptron nonlinearity.

template <class T>
Forward<T, GeluTrace<T>> sine(Tensor<T> x) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(x[i]);
    return {std::move(y), {std::move(x)}};
}

template <class T>
Tensor<T> sine_backward(const GeluTrace<T>& trace, const Tensor<T>& dy) {
    Tensor<T> dx(trace.input.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * std::cos(trace.input[i]);
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm over [batch, channels, length] (or [batch, channels]).
// Normalizes with the population variance; running variance tracks the
// unbiased estimate.

template <class T>
struct BatchNormTrace {
    Tensor<T> normalized;
    std::vector<T> inv_std;
    Mode mode = Mode::Eval;
};

template <class T>
struct BatchNorm1d {
    Parameter<T> gamma;
    Parameter<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm1d() = default;
    BatchNorm1d(const std::string& name, std::size_t channels)
        : gamma(name + ".gamma", Tensor<T>({channels}, T{1})),
          beta(name + ".beta", Tensor<T>({channels}, T{0})),
          running_mean(channels, T{0}),
          running_var(channels, T{1}) {}

    std::size_t channels() const { return gamma.value.size(); }

    Forward<T, BatchNormTrace<T>> forward(const Tensor<T>& x, Mode mode) {
        if ((x.rank() != 3 && x.rank() != 2) || x.dim(1) != channels())
            throw ShapeError("batchnorm: input " + to_string(x.shape()) + " vs " + std::to_string(channels()) +
                             " channels");
        const std::size_t batch = x.dim(0), C = channels();
        const std::size_t len = x.rank() == 3 ? x.dim(2) : 1;
        const std::size_t count = batch * len;
        if (mode == Mode::Train && count <= 1)
            throw DegenerateBatchError("batchnorm: train mode needs more than one element per channel");

        BatchNormTrace<T> trace;
        trace.mode = mode;
        trace.inv_std.resize(C);
        trace.normalized = Tensor<T>(x.shape());
        Tensor<T> y(x.shape());
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0, var = 0.0;
            if (mode == Mode::Train) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t t = 0; t < len; ++t) mean += x[(b * C + c) * len + t];
                mean /= static_cast<double>(count);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t t = 0; t < len; ++t) {
                        const double d = x[(b * C + c) * len + t] - mean;
                        var += d * d;
                    }
                var /= static_cast<double>(count);
                const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
                running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
                running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * unbiased);
            } else {
                mean = running_mean[c];
                var = running_var[c];
            }
            const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
            trace.inv_std[c] = inv;
            const T g = gamma.value[c], bt = beta.value[c], m = static_cast<T>(mean);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < len; ++t) {
                    const std::size_t i = (b * C + c) * len + t;
                    const T xh = (x[i] - m) * inv;
                    trace.normalized[i] = xh;
                    y[i] = g * xh + bt;
                }
        }
        return {std::move(y), std::move(trace)};
    }

    Tensor<T> backward(const BatchNormTrace<T>& trace, const Tensor<T>& dy) {
        const auto& xh = trace.normalized;
        const std::size_t batch = xh.dim(0), C = channels();
        const std::size_t len = xh.rank() == 3 ? xh.dim(2) : 1;
        const double count = static_cast<double>(batch * len);
        Tensor<T> dx(xh.shape());
        for (std::size_t c = 0; c < C; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < len; ++t) {
                    const std::size_t i = (b * C + c) * len + t;
                    sum_dy += dy[i];
                    sum_dy_xh += dy[i] * xh[i];
                }
            gamma.grad[c] += static_cast<T>(sum_dy_xh);
            beta.grad[c] += static_cast<T>(sum_dy);
            const double g = gamma.value[c];
            const double inv = trace.inv_std[c];
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t t = 0; t < len; ++t) {
                    const std::size_t i = (b * C + c) * len + t;
                    if (trace.mode == Mode::Train) {
                        dx[i] = static_cast<T>(g * inv / count *
                                               (count * dy[i] - sum_dy - xh[i] * sum_dy_xh));
                    } else {
                        dx[i] = static_cast<T>(g * inv * dy[i]);
                    }
                }
        }
        return dx;
    }

    void collect(ParameterRefs<T>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

// ---------------------------------------------------------------------------
// Inverted dropout: survivors are scaled by 1/(1-p) at train time.

template <class T>
struct DropoutTrace {
    std::vector<T> mask;  // empty means identity
};

template <class T>
Forward<T, DropoutTrace<T>> dropout(Tensor<T> x, double p, Mode mode, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("dropout: p must lie in [0, 1)");
    if (mode == Mode::Eval || p == 0.0) return {std::move(x), {}};
    DropoutTrace<T> trace;
    trace.mask.resize(x.size());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        trace.mask[i] = rng.bernoulli(p) ? T{0} : keep_scale;
        y[i] = x[i] * trace.mask[i];
    }
    return {std::move(y), std::move(trace)};
}

template <class T>
Tensor<T> dropout_backward(const DropoutTrace<T>& trace, const Tensor<T>& dy) {
    if (trace.mask.empty()) return dy;
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * trace.mask[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy with per-class weights, normalized by the summed
// weight of the batch. Returns the loss and d(loss)/d(logits).

template <class T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad;
};

template <class T>
inline std::vector<double> softmax_row(const T* logits, std::size_t classes) {
    double mx = logits[0];
    for (std::size_t k = 1; k < classes; ++k) mx = std::max<double>(mx, logits[k]);
    std::vector<double> p(classes);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += (p[k] = std::exp(static_cast<double>(logits[k]) - mx));
    for (auto& v : p) v /= z;
    return p;
}

template <class T>
LossResult<T> weighted_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                                     std::span<const double> class_weights) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size())
        throw ShapeError("cross entropy: logits " + to_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (class_weights.size() != classes) throw ShapeError("cross entropy: class weight count mismatch");
    double total_weight = 0.0;
    for (int y : labels) total_weight += class_weights[static_cast<std::size_t>(y)];
    LossResult<T> out;
    out.grad = Tensor<T>(logits.shape());
    if (total_weight <= 0.0) return out;
    for (std::size_t b = 0; b < batch; ++b) {
        const auto y = static_cast<std::size_t>(labels[b]);
        const double w = class_weights[y] / total_weight;
        const auto p = softmax_row(logits.data() + b * classes, classes);
        out.loss -= w * std::log(std::max(p[y], 1e-300));
        for (std::size_t k = 0; k < classes; ++k)
            out.grad[b * classes + k] = static_cast<T>(w * (p[k] - (k == y ? 1.0 : 0.0)));
    }
    return out;
}

}  // namespace refsig::nn
