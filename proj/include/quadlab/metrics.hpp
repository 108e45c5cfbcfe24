// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Image quality metrics for Bayer mosaics and RGB images.

#pragma once

#include <quadlab/cfa.hpp>

#include <span>

namespace quadlab {

/// 10 log10(peak^2 / MSE); +infinity when the inputs are identical.
double psnr(std::span<const float> a, std::span<const float> b, double peak);
/// Peak is white_level - black_level.
double psnr(const MosaicImage& a, const MosaicImage& b);
/// Over all three channels.
double psnr(const RgbImage& a, const RgbImage& b, double peak = 1.0);

struct SsimOptions {
    double peak = 1.0;
    std::size_t window = 11;
    double sigma = 1.5;
};

/// Gaussian-window SSIM of one plane, averaged over all valid window
/// positions. Both sides of the plane must be at least `window`.
double ssim_plane(const float* a, const float* b, std::size_t height, std::size_t width,
                  const SsimOptions& opts = {});
/// Mean of ssim_plane over the three channels.
double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opts = {});

struct KldOptions {
    std::size_t bins = 256;
    double epsilon = 1e-10;  ///< smoothing mass added to every bin
};

/// KL(a || b) of sample histograms over [black, white], one per CFA phase
/// plane, averaged over the phases.
double kld(const MosaicImage& a, const MosaicImage& b, const KldOptions& opts = {});

}  // namespace quadlab
