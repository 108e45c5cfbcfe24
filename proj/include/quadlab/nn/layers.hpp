// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Parameterized layers and blocks. Parameters live in a `ParamSet` and are
/// addressed by a key prefix: a layer registered under "enc.0.conv" reads
/// "enc.0.conv.weight" and "enc.0.conv.bias". Each `*_backward` recomputes
/// whatever intermediates it needs from the forward input, adds parameter
/// gradients into `grads` under the same keys, and returns the input
/// gradient.

#pragma once

#include <quadlab/nn/kernels.hpp>

#include <random>
#include <string>

namespace quadlab::nn {

using Rng = std::mt19937_64;

// --- single layers ------------------------------------------------------------

void init_conv(ParamSet<float>& p, const std::string& key, std::size_t cout, std::size_t cin,
               std::size_t k, Rng& rng);
template<typename T>
BasicTensor<T> conv_layer(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x,
                          ConvSpec spec);
template<typename T>
BasicTensor<T> conv_layer_backward(const ParamSet<T>& p, const std::string& key,
                                   const BasicTensor<T>& x, ConvSpec spec,
                                   const BasicTensor<T>& grad_out, ParamSet<T>& grads);

/// 2x2 stride-2 convolution halving the spatial size.
inline ConvSpec downsample_spec() { return {2, 0, Padding::zero}; }

/// Transposed 2x2 stride-2 convolution; weight is [Cin, Cout, 2, 2].
void init_conv_transpose(ParamSet<float>& p, const std::string& key, std::size_t cin,
                         std::size_t cout, std::size_t k, Rng& rng);
template<typename T>
BasicTensor<T> upsample_layer(const ParamSet<T>& p, const std::string& key,
                              const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> upsample_layer_backward(const ParamSet<T>& p, const std::string& key,
                                       const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                       ParamSet<T>& grads);

void init_prelu(ParamSet<float>& p, const std::string& key, std::size_t channels,
                float slope = 0.25f);
template<typename T>
BasicTensor<T> prelu_layer(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> prelu_layer_backward(const ParamSet<T>& p, const std::string& key,
                                    const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                    ParamSet<T>& grads);

/// Bank grid [P, Q, Cout, Cin, k, k] for a P x Q pattern.
void init_cfa_conv(ParamSet<float>& p, const std::string& key, const CfaPattern& pattern,
                   std::size_t cout, std::size_t cin, std::size_t k, Rng& rng);
template<typename T>
BasicTensor<T> cfa_conv_layer(const ParamSet<T>& p, const std::string& key,
                              const CfaPattern& pattern, const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> cfa_conv_layer_backward(const ParamSet<T>& p, const std::string& key,
                                       const CfaPattern& pattern, const BasicTensor<T>& x,
                                       const BasicTensor<T>& grad_out, ParamSet<T>& grads);

// --- blocks -----------------------------------------------------------------

/// x + conv2(prelu(conv1(x))), 3x3 kernels.
void init_residual_conv(ParamSet<float>& p, const std::string& key, std::size_t channels,
                        Rng& rng);
template<typename T>
BasicTensor<T> residual_conv(const ParamSet<T>& p, const std::string& key,
                             const BasicTensor<T>& x, Padding mode = Padding::zero);
template<typename T>
BasicTensor<T> residual_conv_backward(const ParamSet<T>& p, const std::string& key,
                                      const BasicTensor<T>& x, Padding mode,
                                      const BasicTensor<T>& grad_out, ParamSet<T>& grads);

/// Residual group: x + prelu2(conv2(prelu1(conv1(x)))), 3x3 kernels.
void init_residual_group(ParamSet<float>& p, const std::string& key, std::size_t channels,
                         Rng& rng);
template<typename T>
BasicTensor<T> residual_group(const ParamSet<T>& p, const std::string& key,
                              const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> residual_group_backward(const ParamSet<T>& p, const std::string& key,
                                       const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                       ParamSet<T>& grads);

/// Multi-head self-attention inside non-overlapping window x window tiles.
/// Projections are dense layers on channels: "wq" [C, C] and "bq" [C] (same
/// for k, v, and the output projection o).
void init_window_attention(ParamSet<float>& p, const std::string& key, std::size_t channels,
                           Rng& rng);
template<typename T>
BasicTensor<T> window_attention(const ParamSet<T>& p, const std::string& key,
                                const BasicTensor<T>& x, std::size_t window, std::size_t heads);
template<typename T>
BasicTensor<T> window_attention_backward(const ParamSet<T>& p, const std::string& key,
                                         const BasicTensor<T>& x, std::size_t window,
                                         std::size_t heads, const BasicTensor<T>& grad_out,
                                         ParamSet<T>& grads);

/// CFA attention: pool per phase, two residual convs and a per-site dense
/// layer and a 3x3 conv on the P x Q map (periodic padding), then scale every
/// input site by 2*sigmoid of its phase's attention value.
void init_cfa_attention(ParamSet<float>& p, const std::string& key, std::size_t channels,
                        Rng& rng);
template<typename T>
BasicTensor<T> cfa_attention(const ParamSet<T>& p, const std::string& key,
                             const CfaPattern& pattern, const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> cfa_attention_backward(const ParamSet<T>& p, const std::string& key,
                                      const CfaPattern& pattern, const BasicTensor<T>& x,
                                      const BasicTensor<T>& grad_out, ParamSet<T>& grads);

/// Swin-conv block: the first half of the channels goes through window
/// attention, the second half through a residual conv; the halves are
/// concatenated, fused by a 1x1 conv and added to the input.
void init_sc_block(ParamSet<float>& p, const std::string& key, std::size_t channels, Rng& rng);
template<typename T>
BasicTensor<T> sc_block(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x,
                        std::size_t window, std::size_t heads);
template<typename T>
BasicTensor<T> sc_block_backward(const ParamSet<T>& p, const std::string& key,
                                 const BasicTensor<T>& x, std::size_t window, std::size_t heads,
                                 const BasicTensor<T>& grad_out, ParamSet<T>& grads);

}  // namespace quadlab::nn
