// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/raw_sim.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace quadlab {

double gain_from_db(double gain_db)
{
    return std::pow(10.0, gain_db / 20.0);
}

double noise_variance(const NoiseParams& params, double signal)
{
    const double g = gain_from_db(params.gain_db);
    const double read = g * params.read_sigma_base;
    return read * read + g * params.shot_scale_base * std::max(signal, 0.0);
}

MosaicImage add_noise(const MosaicImage& clean, const NoiseParams& params)
{
    if (!(params.read_sigma_base >= 0.0) || !(params.shot_scale_base >= 0.0))
        throw std::invalid_argument("noise parameters must be non-negative");
    if (!std::isfinite(params.gain_db))
        throw std::invalid_argument("gain must be finite");
    clean.validate();

    MosaicImage out = clean;
    if (params.read_sigma_base == 0.0 && params.shot_scale_base == 0.0)
        return out;

    const double g = gain_from_db(params.gain_db);
    const double read_sigma = g * params.read_sigma_base;
    const double shot_scale = g * params.shot_scale_base;

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (float& v : out.samples) {
        const double signal = std::max(double(v) - clean.black_level, 0.0);
        const double n_shot = std::sqrt(shot_scale * signal) * normal(rng);
        const double n_read = read_sigma * normal(rng);
        double noisy = double(v) + n_shot + n_read;
        if (params.clip)
            noisy = std::clamp(noisy, double(clean.black_level), double(clean.white_level));
        v = float(noisy);
    }
    return out;
}

}  // namespace quadlab
