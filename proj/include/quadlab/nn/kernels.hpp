// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Differentiable building blocks with explicit backward passes.
///
/// Feature maps are NCHW. Every forward is a pure function of its inputs;
/// every `*_backward` takes the forward inputs plus the gradient of the
/// output and returns gradients for each input and parameter. Convolution
/// is cross-correlation (no kernel flip).

#pragma once

#include <quadlab/cfa.hpp>
#include <quadlab/tensor.hpp>

namespace quadlab::nn {

enum class Padding { zero, replicate, periodic };

struct ConvSpec {
    std::size_t stride = 1;
    std::size_t pad = 0;
    Padding mode = Padding::zero;
};

/// Same-size convolution with a k x k kernel.
inline ConvSpec same(std::size_t k, Padding mode = Padding::zero)
{
    return {1, k / 2, mode};
}

template<typename T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> weight;
    BasicTensor<T> bias;  ///< empty when the forward had no bias
};

/// x: [N, Cin, H, W], weight: [Cout, Cin, k, k], bias: [Cout] or empty.
template<typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, ConvSpec spec);
template<typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                             bool has_bias, ConvSpec spec, const BasicTensor<T>& grad_out);

/// Transposed convolution, no padding. weight: [Cin, Cout, k, k].
/// Output extent (H-1)*stride + k.
template<typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, std::size_t stride);
template<typename T>
ConvGrads<T> conv_transpose2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                       bool has_bias, std::size_t stride,
                                       const BasicTensor<T>& grad_out);

/// Phase-periodic convolution. `banks` is [P, Q, Cout, Cin, k, k] for a
/// P x Q pattern; output pixel (i, j) uses bank (i mod P, j mod Q).
/// Stride 1, same-size output.
template<typename T>
BasicTensor<T> cfa_conv(const BasicTensor<T>& x, const CfaPattern& pattern,
                        const BasicTensor<T>& banks, const BasicTensor<T>& bias,
                        Padding mode = Padding::zero);
template<typename T>
ConvGrads<T> cfa_conv_backward(const BasicTensor<T>& x, const CfaPattern& pattern,
                               const BasicTensor<T>& banks, bool has_bias, Padding mode,
                               const BasicTensor<T>& grad_out);

/// Mean over all sites sharing a CFA phase: [N, C, H, W] -> [N, C, P, Q].
template<typename T>
BasicTensor<T> cfa_pool(const BasicTensor<T>& x, const CfaPattern& pattern);
template<typename T>
BasicTensor<T> cfa_pool_backward(const BasicTensor<T>& grad_out, const CfaPattern& pattern,
                                 std::size_t height, std::size_t width);

/// y(n,c,i,j) = x(n,c,i,j) * scale(n, c, i mod P, j mod Q).
template<typename T>
BasicTensor<T> periodic_scale(const BasicTensor<T>& x, const BasicTensor<T>& scale);
template<typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> periodic_scale_backward(
    const BasicTensor<T>& x, const BasicTensor<T>& scale, const BasicTensor<T>& grad_out);

/// Per-channel PReLU on [N, C, ...]; slope is [C].
template<typename T>
BasicTensor<T> prelu(const BasicTensor<T>& x, const BasicTensor<T>& slope);
template<typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> prelu_backward(
    const BasicTensor<T>& x, const BasicTensor<T>& slope, const BasicTensor<T>& grad_out);

/// 2*sigmoid(z): a gate in (0, 2) that equals 1 at z = 0.
template<typename T>
BasicTensor<T> gate(const BasicTensor<T>& z);
template<typename T>
BasicTensor<T> gate_backward(const BasicTensor<T>& z, const BasicTensor<T>& grad_out);

/// x: [N, D], weight: [O, D], bias: [O].
template<typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& bias);
template<typename T>
ConvGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                      const BasicTensor<T>& grad_out);

/// Orthonormal single-level Haar analysis: [N, C, H, W] -> [N, 4C, H/2, W/2]
/// with channel blocks LL, LH, HL, HH. The transform is orthogonal, so the
/// backward of each direction is the other direction.
template<typename T>
BasicTensor<T> haar_dwt(const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> haar_iwt(const BasicTensor<T>& x);

/// Channel slicing and concatenation on NCHW tensors.
template<typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t count);
template<typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// [N, C, P, Q] <-> [N*P*Q, C] so a dense layer acts on channels per site.
template<typename T>
BasicTensor<T> sites_to_rows(const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> rows_to_sites(const BasicTensor<T>& rows, const Shape& nchw);

}  // namespace quadlab::nn
