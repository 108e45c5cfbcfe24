// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// The dual-head joint remosaic + denoise network.
///
/// Two branches run on the same noisy Quad Bayer input:
///   dn-rm: UNet of swin-conv blocks (denoise) followed by a remosaic block;
///   rm-dn: remosaic block followed by a Haar wavelet UNet (denoise).
/// Their Bayer estimates are fused by a 1x1 conv (or a plain mean).

#pragma once

#include <quadlab/cfa.hpp>
#include <quadlab/nn/layers.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <type_traits>
#include <map>
#include <string>

namespace quadlab {

struct ModelConfig {
    std::size_t channels = 16;
    std::size_t window = 8;
    std::size_t heads = 2;
    std::size_t ca_depth = 2;    ///< CFA-attention stages per remosaic block
    std::size_t n1 = 1;          ///< swin-conv blocks per encoder/decoder stage
    std::size_t n2 = 1;          ///< swin-conv blocks at the bottleneck
    std::size_t dwt_levels = 3;
    std::size_t kernel = 3;      ///< CFA conv kernel size (odd)
    std::string aggregation = "concat";  ///< "concat" or "mean"

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Stable "key=value" lines; the checkpoint digest is taken over this.
    std::string canonical() const;
    /// Smallest spatial multiple accepted by `forward`.
    std::size_t size_multiple() const;

    /// Applies one key=value setting; returns false for an unknown key.
    bool set(const std::string& key, const std::string& value);
};

struct ModelState {
    ModelConfig config;
    ParamSet<float> params;
};

/// Fresh weights for `config`, deterministic in `seed`.
ModelState init_model(const ModelConfig& config, std::uint64_t seed);

/// Number of scalar weights.
std::size_t parameter_count(const ModelState& state);

// --- blocks (tensors are [N, 1, H, W] unless noted) --------------------------

template<typename T>
BasicTensor<T> qbre_block(const ParamSet<T>& p, const std::string& key,
                          const ModelConfig& cfg, const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> qbre_block_backward(const ParamSet<T>& p, const std::string& key,
                                   const ModelConfig& cfg, const BasicTensor<T>& x,
                                   const BasicTensor<T>& grad_out, ParamSet<T>& grads);

template<typename T>
BasicTensor<T> branch_dn_rm(const ParamSet<T>& p, const ModelConfig& cfg,
                            const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> branch_dn_rm_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                                     const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                     ParamSet<T>& grads);

template<typename T>
BasicTensor<T> branch_rm_dn(const ParamSet<T>& p, const ModelConfig& cfg,
                            const BasicTensor<T>& x);
template<typename T>
BasicTensor<T> branch_rm_dn_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                                     const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                     ParamSet<T>& grads);

/// Fuses the two branch outputs.
template<typename T>
BasicTensor<T> aggregate(const ParamSet<T>& p, const ModelConfig& cfg,
                         const BasicTensor<T>& x_rm_dn, const BasicTensor<T>& y_dn_rm);

/// Whole network on a batch of Quad Bayer planes.
template<typename T>
BasicTensor<T> model_forward(const ParamSet<T>& p, const ModelConfig& cfg,
                             const BasicTensor<T>& x);
/// Returns the input gradient and adds every weight gradient into `grads`.
template<typename T>
BasicTensor<T> model_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                              const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                              ParamSet<T>& grads);

/// Maps the network output to the gradient of the objective.
template<typename T>
using OutputGradient = std::function<BasicTensor<T>(const BasicTensor<T>&)>;

/// One forward pass and the matching backward pass: returns the output,
/// adds weight gradients into `grads` and optionally stores the input
/// gradient. Cheaper than model_forward followed by model_backward.
template<typename T>
BasicTensor<T> model_forward_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                                      const BasicTensor<T>& x, const std::type_identity_t<OutputGradient<T>>& grad_of,
                                      ParamSet<T>& grads, BasicTensor<T>* input_grad = nullptr);

/// `levels` Haar analyses followed by the matching syntheses with no
/// learned stage in between: the bare wavelet skeleton of the rm-dn branch.
template<typename T>
BasicTensor<T> dwt_cascade_roundtrip(const BasicTensor<T>& x, std::size_t levels);

/// Quad Bayer mosaic in, full-resolution Bayer mosaic out.
MosaicImage forward(const MosaicImage& quad, const ModelState& state);

/// Binary checkpoint. Layout: magic "QLCKPT01", u64 FNV-1a digest of the
/// canonical config, u64 config length + text, u64 tensor count, then per
/// tensor a u64 key length, the key bytes and a tensor snapshot. All
/// integers little-endian.
void save_state(const ModelState& state, const std::filesystem::path& path);
ModelState load_state(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace quadlab
