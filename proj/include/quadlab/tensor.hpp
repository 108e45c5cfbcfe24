// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Dense row-major tensor used by every numerical kernel.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadlab {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Row-major dense array of `T` with an explicit shape. All kernels are
/// written against `BasicTensor<T>` so the same code runs in 32-bit (the
/// production path) and 64-bit (the gradient-check shadow path).
template<typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape))
    {
        for (auto e : shape_)
            if (e == 0)
                throw std::invalid_argument("tensor extents must be positive: "
                                            + shape_string(shape_));
        data_.assign(count(shape_), fill);
    }

    BasicTensor(Shape shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data))
    {
        if (data_.size() != count(shape_))
            throw std::invalid_argument("tensor data length does not match shape "
                                        + shape_string(shape_));
    }

    static std::size_t count(const Shape& shape)
    {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<>());
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// 4-D accessor for NCHW tensors.
    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    BasicTensor reshaped(Shape shape) const
    {
        if (count(shape) != data_.size())
            throw std::invalid_argument("reshape " + shape_string(shape_) + " -> "
                                        + shape_string(shape));
        return BasicTensor(std::move(shape), data_);
    }

    template<typename U>
    BasicTensor<U> cast() const
    {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(out));
    }

    BasicTensor& operator+=(const BasicTensor& other)
    {
        require_same_shape(other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += other.data_[i];
        return *this;
    }

    BasicTensor& operator*=(T s)
    {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(),
                           [](T v) { return std::isfinite(v); });
    }

    void require_same_shape(const BasicTensor& other, const char* what) const
    {
        if (shape_ != other.shape_)
            throw std::invalid_argument(std::string(what) + ": shape mismatch "
                                        + shape_string(shape_) + " vs "
                                        + shape_string(other.shape_));
    }

    friend bool operator==(const BasicTensor& a, const BasicTensor& b)
    {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Named collection of tensors, ordered by key. Used for model parameters,
/// their gradients, and the argument packs of gradient checks.
template<typename T>
using ParamSet = std::map<std::string, BasicTensor<T>>;

template<typename T>
BasicTensor<T> operator+(BasicTensor<T> a, const BasicTensor<T>& b)
{
    a += b;
    return a;
}

template<typename T>
T dot(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    a.require_same_shape(b, "dot");
    T acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

template<typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    a.require_same_shape(b, "max_abs_diff");
    T m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max<T>(m, std::abs(a[i] - b[i]));
    return m;
}

/// Adds `grad` into `grads[key]`, creating the entry on first use.
template<typename T>
void accumulate(ParamSet<T>& grads, const std::string& key, const BasicTensor<T>& grad)
{
    auto it = grads.find(key);
    if (it == grads.end())
        grads.emplace(key, grad);
    else
        it->second += grad;
}

template<typename U, typename T>
ParamSet<U> cast_params(const ParamSet<T>& params)
{
    ParamSet<U> out;
    for (const auto& [k, v] : params)
        out.emplace(k, v.template cast<U>());
    return out;
}

/// Looks up a required key, reporting the key name when missing.
template<typename T>
const BasicTensor<T>& param(const ParamSet<T>& params, const std::string& key)
{
    auto it = params.find(key);
    if (it == params.end())
        throw std::out_of_range("missing parameter '" + key + "'");
    return it->second;
}

/// Maps `BasicTensor<T>` or `ParamSet<T>` to `T`. Lets generic lambdas
/// recover the scalar type of their argument.
template<typename X>
struct scalar_of;
template<typename T>
struct scalar_of<BasicTensor<T>> { using type = T; };
template<typename T>
struct scalar_of<ParamSet<T>> { using type = T; };
template<typename X>
using scalar_of_t = typename scalar_of<std::remove_cvref_t<X>>::type;

}  // namespace quadlab
