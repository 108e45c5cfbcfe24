// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Artifact scoring of reconstructed patches and hard-patch selection.

#pragma once

#include <quadlab/cfa.hpp>

#include <numbers>
#include <string>
#include <vector>

namespace quadlab {

struct MoireOptions {
    double eta = 1e-6;
    /// Radial frequency bound, radians per pixel.
    double cutoff = 0.95 * std::numbers::pi;
};

/// Per-frequency log spectral ratio of one channel plane, row-major H x W in
/// DFT index order: log((|F_ci|^2 + eta) / (|F_gt|^2 + eta)) where the
/// radial frequency is within the cutoff, exactly 1 elsewhere.
std::vector<double> moire_rho(const float* ci, const float* gt, std::size_t height,
                              std::size_t width, const MoireOptions& opts = {});

/// True when DFT index (u, v) of an H x W plane lies inside the cutoff disc.
bool moire_in_band(std::size_t u, std::size_t v, std::size_t height, std::size_t width,
                   double cutoff);

/// Mean over channels of the mean |rho| over the in-band frequencies.
double moire_score(const RgbImage& ci, const RgbImage& gt, const MoireOptions& opts = {});

/// Mean |second difference| along rows plus the same along columns.
double alternating_energy(const float* plane, std::size_t height, std::size_t width);

/// Mean over channels of |alternating_energy(ci) - alternating_energy(gt)|.
double zipper_score(const RgbImage& ci, const RgbImage& gt);

struct PatchScore {
    std::string image_id;
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t size = 128;
    double moire = 0;
    double zipper = 0;
    double combined = 0;  ///< normalized moire + normalized zipper
};

struct ImagePair {
    std::string id;
    RgbImage ci;  ///< reconstruction
    RgbImage gt;  ///< reference
};

struct MiningResult {
    std::vector<PatchScore> patches;
    /// Set when fewer than k patches were available.
    bool short_of_k = false;
    std::size_t candidates = 0;
};

/// Scores every window (stride `stride`), ranks by the combined score
/// (ties by image id, row, col) and greedily keeps the best k whose
/// overlap with every kept window of the same image is at most half.
MiningResult select_hard_patches(const std::vector<ImagePair>& corpus, std::size_t k,
                                 std::size_t patch = 128, std::size_t stride = 64,
                                 const MoireOptions& opts = {});

/// "image_id,row,col,size,moire,zipper,rank" CSV (rank holds the combined
/// score).
std::string manifest_csv(const std::vector<PatchScore>& patches);
std::vector<PatchScore> parse_manifest(const std::string& text);

}  // namespace quadlab
