// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// File formats: raw mosaics as 16-bit PGM plus a `.cfa` sidecar, RGB
/// images as PNG, binary tensor snapshots. Failures raise DataError.

#pragma once

#include <quadlab/cfa.hpp>
#include <quadlab/error.hpp>
#include <quadlab/tensor.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace quadlab {

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Sidecar path: `path` with its extension replaced by ".cfa".
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Writes a binary PGM (maxval 65535, big-endian) mapping
/// [black_level, white_level] linearly onto [0, 65535], plus the sidecar.
void write_mosaic(const std::filesystem::path& path, const MosaicImage& image);
/// Reads a PGM (8 or 16 bit) and its sidecar. Without a sidecar the image
/// is read as Bayer with levels [0, 1].
MosaicImage read_mosaic(const std::filesystem::path& path);

/// PNG in, values scaled to [0, 1]. Gray images are replicated to RGB.
RgbImage read_png(const std::filesystem::path& path);
/// 16-bit RGB PNG, values clamped to [0, 1].
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Snapshot: u64 rank, u64 extents, then raw float32 values, all
/// little-endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);

}  // namespace quadlab
