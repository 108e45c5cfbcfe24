// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/fft.hpp>

#include <cmath>
#include <numbers>
#include <utility>

namespace quadlab {

namespace {

bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

std::complex<double> twiddle(std::size_t k, std::size_t n, bool inverse)
{
    const double a = (inverse ? 2.0 : -2.0) * std::numbers::pi * double(k % n) / double(n);
    return {std::cos(a), std::sin(a)};
}

}  // namespace

void dft1(std::complex<double>* data, std::size_t n, std::size_t stride, bool inverse)
{
    if (n <= 1)
        return;
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = data[i * stride];

    if (is_pow2(n)) {
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1)
                j ^= bit;
            j ^= bit;
            if (i < j)
                std::swap(buf[i], buf[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t half = len / 2, step = n / len;
            for (std::size_t i = 0; i < n; i += len)
                for (std::size_t k = 0; k < half; ++k) {
                    const auto w = twiddle(k * step, n, inverse);
                    const auto u = buf[i + k];
                    const auto v = buf[i + k + half] * w;
                    buf[i + k] = u + v;
                    buf[i + k + half] = u - v;
                }
        }
    } else {
        std::vector<std::complex<double>> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> acc = 0;
            for (std::size_t x = 0; x < n; ++x)
                acc += buf[x] * twiddle(k * x, n, inverse);
            out[k] = acc;
        }
        buf.swap(out);
    }
    for (std::size_t i = 0; i < n; ++i)
        data[i * stride] = buf[i];
}

void dft2(ComplexPlane& plane, std::size_t rows, std::size_t cols, bool inverse)
{
    for (std::size_t r = 0; r < rows; ++r)
        dft1(plane.data() + r * cols, cols, 1, inverse);
    for (std::size_t c = 0; c < cols; ++c)
        dft1(plane.data() + c, rows, cols, inverse);
}

}  // namespace quadlab
