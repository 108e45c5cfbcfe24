// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

// Small helpers shared by the unit tests.

#pragma once

#include <quadlab/cfa.hpp>
#include <quadlab/tensor.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace quadlab::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1.f, float hi = 1.f)
{
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> u(lo, hi);
    for (auto& v : t.values())
        v = u(rng);
    return t;
}

inline RgbImage random_rgb(std::size_t h, std::size_t w, std::mt19937_64& rng)
{
    RgbImage img(h, w);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& p : img.planes)
        for (auto& v : p)
            v = u(rng);
    return img;
}

inline MosaicImage random_mosaic(std::size_t h, std::size_t w, const CfaPattern& p,
                                 std::mt19937_64& rng)
{
    MosaicImage m(h, w, p);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& v : m.samples)
        v = u(rng);
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("quadlab_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace quadlab::test
