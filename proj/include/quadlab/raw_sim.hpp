// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Read + shot noise simulation for raw mosaics.

#pragma once

#include <quadlab/cfa.hpp>

#include <cstdint>

namespace quadlab {

/// Noise model parameters. `gain_db` scales the noise: with
/// g = 10^(gain_db/20) the read-noise variance is (g*read_sigma_base)^2 and
/// the shot-noise variance is g*shot_scale_base*signal.
struct NoiseParams {
    double gain_db = 0.0;
    double read_sigma_base = 0.005;
    double shot_scale_base = 0.0005;
    std::uint64_t seed = 0;
    /// Clamp the result to [black_level, white_level].
    bool clip = true;
};

/// The three standard degradation levels.
inline constexpr double kNoiseLevelsDb[3] = {0.0, 24.0, 42.0};

double gain_from_db(double gain_db);

/// Expected per-pixel noise variance for a given (black-subtracted) signal.
double noise_variance(const NoiseParams& params, double signal);

/// Adds Gaussian read and shot noise. Deterministic for a fixed seed.
MosaicImage add_noise(const MosaicImage& clean, const NoiseParams& params);

}  // namespace quadlab
