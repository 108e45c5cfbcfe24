// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace quadlab {

using ComplexPlane = std::vector<std::complex<double>>;

/// In-place unnormalized 1-D DFT. `inverse` flips the exponent sign
/// (no 1/n factor). Radix-2 when n is a power of two, direct otherwise.
void dft1(std::complex<double>* data, std::size_t n, std::size_t stride, bool inverse);

/// Unnormalized 2-D DFT of a row-major `rows` x `cols` plane.
void dft2(ComplexPlane& plane, std::size_t rows, std::size_t cols, bool inverse = false);

template<typename T>
ComplexPlane dft2_real(const T* data, std::size_t rows, std::size_t cols)
{
    ComplexPlane plane(data, data + rows * cols);
    dft2(plane, rows, cols, false);
    return plane;
}

}  // namespace quadlab
