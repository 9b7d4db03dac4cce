#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "refsig/common/error.hpp"

namespace refsig::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << ']';
    return os.str();
}

// Eigen's vectorized reductions peel a scalar prologue that depends on the
// buffer address mod the SIMD width. Pinning the base alignment keeps the
// summation order, and so float results, independent of where malloc lands.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

// Dense row-major tensor. Owns its storage; copies are deep.
template <class T>
class Tensor {
public:
    using value_type = T;
    using Storage = AlignedVector<T>;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), values_(element_count(shape_), fill) {
        validate_shape();
    }

    Tensor(Shape shape, std::initializer_list<T> values) : Tensor(std::move(shape), Storage(values)) {}

    Tensor(Shape shape, const std::vector<T>& values) : Tensor(std::move(shape), Storage(values.begin(), values.end())) {}

    Tensor(Shape shape, Storage values) : shape_(std::move(shape)), values_(std::move(values)) {
        validate_shape();
        if (values_.size() != element_count(shape_))
            throw ShapeError("tensor: " + std::to_string(values_.size()) + " values do not fill shape " +
                             nn::to_string(shape_));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    T* data() { return values_.data(); }
    const T* data() const { return values_.data(); }
    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    Storage& storage() { return values_; }
    const Storage& storage() const { return values_; }

    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    T& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) { return values_[(i * shape_[1] + j) * shape_[2] + k]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

    Tensor reshaped(Shape shape) const& {
        if (element_count(shape) != size())
            throw ShapeError("reshape " + nn::to_string(shape_) + " -> " + nn::to_string(shape));
        return Tensor(std::move(shape), values_);
    }

    Tensor reshaped(Shape shape) && {
        if (element_count(shape) != size())
            throw ShapeError("reshape " + nn::to_string(shape_) + " -> " + nn::to_string(shape));
        return Tensor(std::move(shape), std::move(values_));
    }

    template <class U>
    Tensor<U> cast() const {
        typename Tensor<U>::Storage v(values_.begin(), values_.end());
        return Tensor<U>(shape_, std::move(v));
    }

    bool all_finite() const {
        for (const T& v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    void validate_shape() const {
        for (auto e : shape_)
            if (e == 0) throw ShapeError("tensor extents must be positive, got " + nn::to_string(shape_));
    }

    Shape shape_;
    Storage values_;
};

// NaN/Inf is a hard failure in debug builds.
template <class T>
inline void debug_check_finite([[maybe_unused]] const Tensor<T>& t, [[maybe_unused]] const char* where) {
#ifndef NDEBUG
    if (!t.all_finite()) throw DivergenceError(std::string("non-finite values after ") + where);
#endif
}

enum class Mode { Train, Eval };

template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    std::size_t size() const { return value.size(); }
    void zero_grad() { grad.fill(T{0}); }
};

template <class T>
using ParameterRefs = std::vector<Parameter<T>*>;

// Sum over parameters of product(shape).
template <class T>
inline std::size_t total_parameter_count(const ParameterRefs<T>& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += p->size();
    return n;
}

template <class T>
inline void zero_grads(const ParameterRefs<T>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace refsig::nn
