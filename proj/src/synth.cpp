// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/synth.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace quadlab {

RgbImage synth_scene(std::size_t h, std::size_t w, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    RgbImage img(h, w);

    // Per-channel bilinear gradient between four random corner colors.
    float corner[4][3];
    for (auto& c : corner)
        for (float& v : c)
            v = 0.2f + 0.6f * u(rng);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const float a = float(i) / float(std::max<std::size_t>(h - 1, 1));
            const float b = float(j) / float(std::max<std::size_t>(w - 1, 1));
            for (int c = 0; c < 3; ++c)
                img.at(c, i, j) = (1 - a) * ((1 - b) * corner[0][c] + b * corner[1][c])
                                  + a * ((1 - b) * corner[2][c] + b * corner[3][c]);
        }

    // Flat disks and rectangles.
    const int shapes = 3 + int(rng() % 3);
    for (int s = 0; s < shapes; ++s) {
        const float color[3] = {u(rng), u(rng), u(rng)};
        const float ci = u(rng) * float(h), cj = u(rng) * float(w);
        const float r = (0.08f + 0.2f * u(rng)) * float(std::min(h, w));
        const bool disk = rng() & 1;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const float di = float(i) - ci, dj = float(j) - cj;
                const bool inside = disk ? di * di + dj * dj <= r * r
                                         : std::abs(di) <= r && std::abs(dj) <= 0.6f * r;
                if (inside)
                    for (int c = 0; c < 3; ++c)
                        img.at(c, i, j) = color[c];
            }
    }

    // One patch of oriented stripes.
    const float theta = u(rng) * std::numbers::pi_v<float>;
    const float period = 3.f + 6.f * u(rng);
    const std::size_t si = std::size_t(u(rng) * float(h) / 2), sj = std::size_t(u(rng) * float(w) / 2);
    for (std::size_t i = si; i < std::min(h, si + h / 3); ++i)
        for (std::size_t j = sj; j < std::min(w, sj + w / 3); ++j) {
            const float t = std::cos(theta) * float(i) + std::sin(theta) * float(j);
            const float v = 0.5f + 0.3f * std::sin(2 * std::numbers::pi_v<float> * t / period);
            for (int c = 0; c < 3; ++c)
                img.at(c, i, j) = v;
        }

    for (auto& plane : img.planes)
        for (float& v : plane)
            v = std::clamp(v, 0.05f, 0.95f);
    return img;
}

RgbImage synth_texture(std::size_t h, std::size_t w, std::uint64_t seed, float amplitude)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    RgbImage img(h, w, 0.5f);
    constexpr int kWaves = 12;
    for (int k = 0; k < kWaves; ++k) {
        const float theta = u(rng) * std::numbers::pi_v<float>;
        const float freq = 0.3f + 1.2f * u(rng);  // radians per pixel
        const float phase = u(rng) * 2 * std::numbers::pi_v<float>;
        const float gain[3] = {u(rng), u(rng), u(rng)};
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const float v = std::sin(freq * (std::cos(theta) * float(i)
                                                 + std::sin(theta) * float(j))
                                         + phase);
                for (int c = 0; c < 3; ++c)
                    img.at(c, i, j) += amplitude / kWaves * 3 * gain[c] * v;
            }
    }
    for (auto& plane : img.planes)
        for (float& v : plane)
            v = std::clamp(v, 0.f, 1.f);
    return img;
}

void inject_zone_plate(RgbImage& img, std::size_t row, std::size_t col, std::size_t size,
                       float amplitude)
{
    const float half = float(size) / 2;
    const float k = std::numbers::pi_v<float> / float(size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const float di = float(i) - half, dj = float(j) - half;
            const float v = amplitude * std::cos(k * (di * di + dj * dj));
            img.at(0, row + i, col + j) = std::clamp(img.at(0, row + i, col + j) + v, 0.f, 1.f);
            img.at(2, row + i, col + j) = std::clamp(img.at(2, row + i, col + j) - v, 0.f, 1.f);
        }
}

void inject_zipper(RgbImage& img, std::size_t row, std::size_t col, std::size_t size,
                   float amplitude)
{
    const std::size_t edge = col + size / 2;
    for (std::size_t i = row; i < row + size; ++i) {
        const float s = (i % 2) ? amplitude : -amplitude;
        for (std::size_t j = edge - 1; j <= edge; ++j)
            for (int c = 0; c < 3; ++c)
                img.at(c, i, j) = std::clamp(img.at(c, i, j) + s, 0.f, 1.f);
    }
}

}  // namespace quadlab
