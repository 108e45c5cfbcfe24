// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Color filter array patterns, mosaic sampling, frequency structure
/// analysis and the classical (non-learned) remosaic / demosaic baselines.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace quadlab {

enum class Color : std::uint8_t { R = 0, G = 1, B = 2 };

char color_letter(Color c);
Color color_from_letter(char c);

/// A periodic grid of color labels.
class CfaPattern {
public:
    CfaPattern(int rows, int cols, std::vector<Color> labels, std::string name = "custom");

    /// 2x2 [[G,R],[B,G]].
    static const CfaPattern& bayer();
    /// 4x4 pixel-doubled Bayer: every aligned 2x2 cell holds one color.
    static const CfaPattern& quad();
    /// Builds from a name ("bayer", "quad") or a row-major label string
    /// whose length is a perfect square ("GRBG", "GGRRGGRRBBGGBBGG").
    static CfaPattern parse(const std::string& text);

    int period_rows() const { return rows_; }
    int period_cols() const { return cols_; }
    const std::string& name() const { return name_; }
    Color at(int i, int j) const { return labels_[i * cols_ + j]; }
    /// Label of an absolute pixel position.
    Color color_at(std::size_t i, std::size_t j) const
    {
        return labels_[(i % rows_) * cols_ + (j % cols_)];
    }
    const std::vector<Color>& labels() const { return labels_; }
    std::string label_string() const;

    bool operator==(const CfaPattern& o) const
    {
        return rows_ == o.rows_ && cols_ == o.cols_ && labels_ == o.labels_;
    }

private:
    int rows_;
    int cols_;
    std::vector<Color> labels_;
    std::string name_;
};

/// Position of pixel (i, j) within one pattern period.
std::pair<int, int> relative_position(std::size_t i, std::size_t j, const CfaPattern& pattern);

/// Full-color image, three planar channels.
struct RgbImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::array<std::vector<float>, 3> planes;

    RgbImage() = default;
    RgbImage(std::size_t h, std::size_t w, float fill = 0.f);

    float& at(int c, std::size_t i, std::size_t j) { return planes[c][i * width + j]; }
    float at(int c, std::size_t i, std::size_t j) const { return planes[c][i * width + j]; }

    RgbImage crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const;
};

/// Single-channel raw sample plane bound to a CFA pattern.
struct MosaicImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> samples;
    CfaPattern pattern = CfaPattern::bayer();
    float black_level = 0.f;
    float white_level = 1.f;

    MosaicImage() = default;
    MosaicImage(std::size_t h, std::size_t w, CfaPattern p, float fill = 0.f);

    float& at(std::size_t i, std::size_t j) { return samples[i * width + j]; }
    float at(std::size_t i, std::size_t j) const { return samples[i * width + j]; }

    /// Throws std::invalid_argument when any invariant is broken.
    void validate() const;
};

/// Samples `rgb` through `pattern`. Levels are set to [0, 1].
MosaicImage mosaic(const RgbImage& rgb, const CfaPattern& pattern);

/// One entry of a frequency structure matrix: the coefficient of each of
/// R, G, B (complex) plus the value at the evaluated triple.
struct FsmEntry {
    std::array<std::complex<double>, 3> coeff;
    std::complex<double> value;
};

struct FrequencyStructureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<FsmEntry> entries;

    const FsmEntry& at(int u, int v) const { return entries[u * cols + v]; }
    /// Renders entry (u, v) as a rational combination such as "(2G+R+B)/4".
    std::string symbolic(int u, int v) const;
    /// True when both the symbolic coefficients and the value vanish.
    bool structural_zero(int u, int v, double tol = 1e-12) const;
};

/// DFT of one pattern period, normalized by 1/(rows*cols), with entry (u, v)
/// holding the coefficient of frequency (u/rows, v/cols).
FrequencyStructureMatrix fsm(const CfaPattern& pattern, std::array<double, 3> rgb);

/// Nearest-site permutation from Quad Bayer to Bayer within each 4x4 tile.
MosaicImage quad_to_bayer_swap(const MosaicImage& quad);

/// For each Bayer site (row-major in the 4x4 tile), the source index
/// (row-major) of the Quad sample that moves there.
const std::array<int, 16>& quad_to_bayer_table();

/// Averages every same-color 2x2 cell; output is half resolution Bayer.
MosaicImage bin2x2(const MosaicImage& quad);

/// Bilinear demosaic of a 2x2-period mosaic. Missing values are the mean
/// of the nearest same-color neighbors; borders are mirrored about the
/// edge pixel so mirrored neighbors keep their CFA color.
RgbImage bilinear_demosaic(const MosaicImage& bayer);

}  // namespace quadlab
