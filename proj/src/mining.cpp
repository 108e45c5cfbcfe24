// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/mining.hpp>

#include <quadlab/error.hpp>
#include <quadlab/fft.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace quadlab {

namespace {

void require_same(const RgbImage& a, const RgbImage& b, const char* what)
{
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    if (a.height == 0 || a.width == 0)
        throw std::invalid_argument(std::string(what) + ": empty image");
}

// Signed DFT frequency in radians per sample.
double omega(std::size_t u, std::size_t n)
{
    const double s = u <= n / 2 ? double(u) : double(u) - double(n);
    return 2 * std::numbers::pi * s / double(n);
}

}  // namespace

bool moire_in_band(std::size_t u, std::size_t v, std::size_t h, std::size_t w, double cutoff)
{
    return std::hypot(omega(u, h), omega(v, w)) <= cutoff;
}

std::vector<double> moire_rho(const float* ci, const float* gt, std::size_t h, std::size_t w,
                              const MoireOptions& opts)
{
    if (!(opts.eta > 0))
        throw std::invalid_argument("moire: eta must be > 0");
    const ComplexPlane fc = dft2_real(ci, h, w);
    const ComplexPlane fg = dft2_real(gt, h, w);
    std::vector<double> rho(h * w, 1.0);
    for (std::size_t u = 0; u < h; ++u)
        for (std::size_t v = 0; v < w; ++v)
            if (moire_in_band(u, v, h, w, opts.cutoff)) {
                const std::size_t i = u * w + v;
                rho[i] = std::log((std::norm(fc[i]) + opts.eta) / (std::norm(fg[i]) + opts.eta));
            }
    return rho;
}

double moire_score(const RgbImage& ci, const RgbImage& gt, const MoireOptions& opts)
{
    require_same(ci, gt, "moire_score");
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        const auto rho = moire_rho(ci.planes[c].data(), gt.planes[c].data(), ci.height, ci.width,
                                   opts);
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t u = 0; u < ci.height; ++u)
            for (std::size_t v = 0; v < ci.width; ++v)
                if (moire_in_band(u, v, ci.height, ci.width, opts.cutoff)) {
                    sum += std::abs(rho[u * ci.width + v]);
                    ++n;
                }
        total += sum / double(n);
    }
    return total / 3;
}

double alternating_energy(const float* p, std::size_t h, std::size_t w)
{
    double rows = 0, cols = 0;
    std::size_t nr = 0, nc = 0;
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 1; j + 1 < w; ++j, ++nr)
            rows += std::abs(double(p[i * w + j - 1]) - 2.0 * p[i * w + j] + p[i * w + j + 1]);
    for (std::size_t i = 1; i + 1 < h; ++i)
        for (std::size_t j = 0; j < w; ++j, ++nc)
            cols += std::abs(double(p[(i - 1) * w + j]) - 2.0 * p[i * w + j] + p[(i + 1) * w + j]);
    return (nr ? rows / double(nr) : 0.0) + (nc ? cols / double(nc) : 0.0);
}

double zipper_score(const RgbImage& ci, const RgbImage& gt)
{
    require_same(ci, gt, "zipper_score");
    double total = 0;
    for (int c = 0; c < 3; ++c)
        total += std::abs(alternating_energy(ci.planes[c].data(), ci.height, ci.width)
                          - alternating_energy(gt.planes[c].data(), gt.height, gt.width));
    return total / 3;
}

MiningResult select_hard_patches(const std::vector<ImagePair>& corpus, std::size_t k,
                                 std::size_t patch, std::size_t stride, const MoireOptions& opts)
{
    if (k == 0)
        throw std::invalid_argument("select_hard_patches: k must be > 0");
    if (patch == 0 || stride == 0)
        throw std::invalid_argument("select_hard_patches: patch and stride must be > 0");

    MiningResult result;
    std::vector<PatchScore> all;
    for (const auto& pair : corpus) {
        require_same(pair.ci, pair.gt, "select_hard_patches");
        if (pair.ci.height < patch || pair.ci.width < patch)
            continue;
        for (std::size_t r = 0; r + patch <= pair.ci.height; r += stride)
            for (std::size_t c = 0; c + patch <= pair.ci.width; c += stride) {
                const RgbImage a = pair.ci.crop(r, c, patch, patch);
                const RgbImage b = pair.gt.crop(r, c, patch, patch);
                all.push_back({pair.id, r, c, patch, moire_score(a, b, opts), zipper_score(a, b),
                               0.0});
            }
    }
    result.candidates = all.size();

    auto normalize = [&](double PatchScore::*field) {
        double lo = 0, hi = 0;
        if (!all.empty()) {
            auto [mn, mx] = std::minmax_element(
                all.begin(), all.end(), [&](auto& a, auto& b) { return a.*field < b.*field; });
            lo = (*mn).*field;
            hi = (*mx).*field;
        }
        for (auto& s : all)
            s.combined += hi > lo ? (s.*field - lo) / (hi - lo) : 0.0;
    };
    normalize(&PatchScore::moire);
    normalize(&PatchScore::zipper);

    std::sort(all.begin(), all.end(), [](const PatchScore& a, const PatchScore& b) {
        if (a.combined != b.combined)
            return a.combined > b.combined;
        return std::tie(a.image_id, a.row, a.col) < std::tie(b.image_id, b.row, b.col);
    });

    const double limit = 0.5 * double(patch) * double(patch);
    for (const auto& cand : all) {
        if (result.patches.size() == k)
            break;
        bool clash = false;
        for (const auto& kept : result.patches) {
            if (kept.image_id != cand.image_id)
                continue;
            const auto overlap = [&](std::size_t a, std::size_t b) {
                const std::size_t lo = std::max(a, b), hi = std::min(a, b) + patch;
                return hi > lo ? double(hi - lo) : 0.0;
            };
            if (overlap(kept.row, cand.row) * overlap(kept.col, cand.col) > limit) {
                clash = true;
                break;
            }
        }
        if (!clash)
            result.patches.push_back(cand);
    }
    result.short_of_k = result.patches.size() < k;
    return result;
}

std::string manifest_csv(const std::vector<PatchScore>& patches)
{
    std::ostringstream s;
    s.precision(9);
    s << "image_id,row,col,size,moire,zipper,rank\n";
    for (const auto& p : patches)
        s << p.image_id << ',' << p.row << ',' << p.col << ',' << p.size << ',' << p.moire << ','
          << p.zipper << ',' << p.combined << '\n';
    return s.str();
}

std::vector<PatchScore> parse_manifest(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "image_id,row,col,size,moire,zipper,rank")
        throw DataError("manifest: missing or unexpected header");
    std::vector<PatchScore> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        if (f.size() != 7)
            throw DataError("manifest line " + std::to_string(lineno) + ": expected 7 fields");
        try {
            out.push_back({f[0], std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]),
                           std::stod(f[4]), std::stod(f[5]), std::stod(f[6])});
        } catch (const std::logic_error&) {
            throw DataError("manifest line " + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

}  // namespace quadlab
