// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/io.hpp>

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <vector>

namespace quadlab {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "snapshot code assumes little-endian");

void write_file_atomic(const fs::path& path, const std::string& bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out)
            throw DataError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError("cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path sidecar_path(const fs::path& path)
{
    fs::path p = path;
    p.replace_extension(".cfa");
    return p;
}

// --- PGM --------------------------------------------------------------------

void write_mosaic(const fs::path& path, const MosaicImage& image)
{
    image.validate();
    std::string pgm = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height)
                      + "\n65535\n";
    const std::size_t header = pgm.size();
    pgm.resize(header + 2 * image.samples.size());
    const double span = double(image.white_level) - image.black_level;
    for (std::size_t i = 0; i < image.samples.size(); ++i) {
        double v = (image.samples[i] - image.black_level) / span;
        v = std::clamp(v, 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        pgm[header + 2 * i] = char(q >> 8);
        pgm[header + 2 * i + 1] = char(q & 0xff);
    }
    std::ostringstream side;
    side.precision(9);
    side << "pattern=" << image.pattern.name() << "\n"
         << "labels=" << image.pattern.label_string() << "\n"
         << "period=" << image.pattern.period_rows() << "x" << image.pattern.period_cols() << "\n"
         << "black_level=" << image.black_level << "\n"
         << "white_level=" << image.white_level << "\n";
    write_file_atomic(sidecar_path(path), side.str());
    write_file_atomic(path, pgm);
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& s, std::size_t& pos)
{
    for (;;) {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos < s.size() && s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n')
                ++pos;
            continue;
        }
        break;
    }
    const std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
    return s.substr(start, pos - start);
}

std::size_t pgm_number(const std::string& s, std::size_t& pos, const fs::path& path)
{
    const std::string tok = pgm_token(s, pos);
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(tok, &used);
        if (used != tok.size() || v == 0)
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
}

}  // namespace

MosaicImage read_mosaic(const fs::path& path)
{
    const std::string data = read_file(path);
    std::size_t pos = 0;
    if (pgm_token(data, pos) != "P5")
        throw DataError(path.string() + ": not a binary PGM");
    const std::size_t w = pgm_number(data, pos, path);
    const std::size_t h = pgm_number(data, pos, path);
    const std::size_t maxval = pgm_number(data, pos, path);
    if (maxval > 65535)
        throw DataError(path.string() + ": unsupported maxval");
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (data.size() < pos + w * h * bpp)
        throw DataError(path.string() + ": truncated pixel data");

    CfaPattern pattern = CfaPattern::bayer();
    float black = 0.f, white = 1.f;
    const fs::path side = sidecar_path(path);
    if (fs::exists(side)) {
        std::istringstream in(read_file(side));
        std::string line, labels, name;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError(side.string() + ": malformed line '" + line + "'");
            const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
            try {
                if (key == "pattern")
                    name = value;
                else if (key == "labels")
                    labels = value;
                else if (key == "black_level")
                    black = std::stof(value);
                else if (key == "white_level")
                    white = std::stof(value);
                else if (key != "period")
                    throw DataError(side.string() + ": unknown key '" + key + "'");
            } catch (const std::logic_error&) {
                throw DataError(side.string() + ": bad value for '" + key + "'");
            }
        }
        try {
            if (!labels.empty()) {
                pattern = CfaPattern::parse(labels);
                if (name == "bayer" || name == "quad")
                    pattern = CfaPattern::parse(name);
            } else if (!name.empty()) {
                pattern = CfaPattern::parse(name);
            }
        } catch (const std::invalid_argument& e) {
            throw DataError(side.string() + ": " + e.what());
        }
    }

    MosaicImage img(h, w, pattern);
    img.black_level = black;
    img.white_level = white;
    const double span = double(white) - black;
    const auto* px = reinterpret_cast<const unsigned char*>(data.data() + pos);
    for (std::size_t i = 0; i < w * h; ++i) {
        const unsigned v = bpp == 2 ? (unsigned(px[2 * i]) << 8) | px[2 * i + 1] : px[i];
        img.samples[i] = float(black + span * double(v) / double(maxval));
    }
    try {
        img.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return img;
}

// --- PNG --------------------------------------------------------------------

RgbImage read_png(const fs::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    const std::string bytes = read_file(path);
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw DataError(path.string() + ": " + image.message);
    // Read the stored code values as they are: 16-bit files through the
    // linear format (no gamma chunk means no conversion), 8-bit through sRGB.
    const bool wide = image.format & PNG_FORMAT_FLAG_LINEAR;
    image.format = wide ? PNG_FORMAT_LINEAR_RGB : PNG_FORMAT_RGB;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError(path.string() + ": " + msg);
    }
    RgbImage out(image.height, image.width);
    const std::size_t n = std::size_t(image.height) * image.width;
    if (wide) {
        const auto* px = reinterpret_cast<const png_uint_16*>(buf.data());
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c)
                out.planes[c][i] = float(px[3 * i + c]) / 65535.f;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c)
                out.planes[c][i] = float(buf[3 * i + c]) / 255.f;
    }
    return out;
}

void write_png(const fs::path& path, const RgbImage& img)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(img.width);
    image.height = png_uint_32(img.height);
    image.format = PNG_FORMAT_LINEAR_RGB;
    std::vector<png_uint_16> buf(3 * img.width * img.height);
    for (std::size_t i = 0; i < img.width * img.height; ++i)
        for (int c = 0; c < 3; ++c) {
            const float v = std::clamp(img.planes[c][i], 0.f, 1.f);
            buf[3 * i + c] = png_uint_16(std::lround(v * 65535.f));
        }
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, buf.data(), 0, nullptr))
        throw DataError(path.string() + ": " + image.message);
    std::string bytes(size, '\0');
    if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, buf.data(), 0, nullptr))
        throw DataError(path.string() + ": " + image.message);
    bytes.resize(size);
    write_file_atomic(path, bytes);
}

// --- tensor snapshots ---------------------------------------------------------

void write_u64(std::ostream& out, std::uint64_t v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in)
{
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw DataError("unexpected end of snapshot");
    return v;
}

void write_tensor(std::ostream& out, const Tensor& t)
{
    write_u64(out, t.rank());
    for (auto e : t.shape())
        write_u64(out, e);
    out.write(reinterpret_cast<const char*>(t.data()), std::streamsize(t.size() * sizeof(float)));
}

Tensor read_tensor(std::istream& in)
{
    const std::uint64_t rank = read_u64(in);
    if (rank == 0 || rank > 8)
        throw DataError("snapshot: implausible rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& e : shape) {
        e = read_u64(in);
        if (e == 0 || e > (1ull << 32))
            throw DataError("snapshot: implausible extent");
        count *= e;
        if (count > (1ull << 32))
            throw DataError("snapshot: tensor too large");
    }
    std::vector<float> values(count);
    if (!in.read(reinterpret_cast<char*>(values.data()), std::streamsize(count * sizeof(float))))
        throw DataError("snapshot: truncated tensor data");
    return Tensor(std::move(shape), std::move(values));
}

}  // namespace quadlab
