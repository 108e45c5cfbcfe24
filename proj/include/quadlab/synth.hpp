// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Procedural test scenes.

#pragma once

#include <quadlab/cfa.hpp>

#include <cstdint>

namespace quadlab {

/// Smooth color gradients overlaid with a few flat shapes and one stripe
/// patch. Values stay within [0.05, 0.95]. Deterministic in `seed`.
RgbImage synth_scene(std::size_t height, std::size_t width, std::uint64_t seed);

/// Fine isotropic texture (a sum of random mid/high-frequency gratings) on
/// a gray base, for corpora where every window carries some detail.
RgbImage synth_texture(std::size_t height, std::size_t width, std::uint64_t seed,
                       float amplitude = 0.08f);

/// Adds a chroma zone plate to the window at (row, col) of extent `size`:
/// red and blue move in opposite directions along cos(k r^2), green fixed.
void inject_zone_plate(RgbImage& image, std::size_t row, std::size_t col, std::size_t size,
                       float amplitude);

/// Adds a one-pixel on/off alternation of +-amplitude along a vertical
/// edge at the center of the window.
void inject_zipper(RgbImage& image, std::size_t row, std::size_t col, std::size_t size,
                   float amplitude);

}  // namespace quadlab
