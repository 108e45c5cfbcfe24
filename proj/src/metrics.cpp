// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace quadlab {

double psnr(std::span<const float> a, std::span<const float> b, double peak)
{
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("psnr: inputs must be nonempty and equally sized");
    if (!(peak > 0))
        throw std::invalid_argument("psnr: peak must be > 0");
    double sse = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        sse += d * d;
    }
    if (sse == 0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / (sse / double(a.size())));
}

double psnr(const MosaicImage& a, const MosaicImage& b)
{
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("psnr: mosaic shape mismatch");
    return psnr(a.samples, b.samples, double(b.white_level) - b.black_level);
}

double psnr(const RgbImage& a, const RgbImage& b, double peak)
{
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("psnr: image shape mismatch");
    std::vector<float> fa, fb;
    for (int c = 0; c < 3; ++c) {
        fa.insert(fa.end(), a.planes[c].begin(), a.planes[c].end());
        fb.insert(fb.end(), b.planes[c].begin(), b.planes[c].end());
    }
    return psnr(fa, fb, peak);
}

double ssim_plane(const float* a, const float* b, std::size_t h, std::size_t w,
                  const SsimOptions& opts)
{
    const std::size_t k = opts.window;
    if (k == 0 || h < k || w < k)
        throw std::invalid_argument("ssim: image smaller than the window");
    std::vector<double> g(k * k);
    double gsum = 0;
    const double c = double(k - 1) / 2;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const double di = double(i) - c, dj = double(j) - c;
            g[i * k + j] = std::exp(-(di * di + dj * dj) / (2 * opts.sigma * opts.sigma));
            gsum += g[i * k + j];
        }
    for (auto& v : g)
        v /= gsum;

    const double c1 = (0.01 * opts.peak) * (0.01 * opts.peak);
    const double c2 = (0.03 * opts.peak) * (0.03 * opts.peak);
    double total = 0;
    for (std::size_t i = 0; i + k <= h; ++i)
        for (std::size_t j = 0; j + k <= w; ++j) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t u = 0; u < k; ++u)
                for (std::size_t v = 0; v < k; ++v) {
                    const double wt = g[u * k + v];
                    const double x = a[(i + u) * w + j + v], y = b[(i + u) * w + j + v];
                    ma += wt * x;
                    mb += wt * y;
                    saa += wt * x * x;
                    sbb += wt * y * y;
                    sab += wt * x * y;
                }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2))
                     / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    return total / double((h - k + 1) * (w - k + 1));
}

double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opts)
{
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("ssim: image shape mismatch");
    double total = 0;
    for (int c = 0; c < 3; ++c)
        total += ssim_plane(a.planes[c].data(), b.planes[c].data(), a.height, a.width, opts);
    return total / 3;
}

double kld(const MosaicImage& a, const MosaicImage& b, const KldOptions& opts)
{
    if (!(a.pattern == b.pattern))
        throw std::invalid_argument("kld: patterns differ");
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("kld: shape mismatch");
    if (opts.bins < 2)
        throw std::invalid_argument("kld: need at least 2 bins");
    const double lo = b.black_level, span = double(b.white_level) - b.black_level;
    const int P = a.pattern.period_rows(), Q = a.pattern.period_cols();

    auto histogram = [&](const MosaicImage& m, int pi, int qj) {
        std::vector<double> h(opts.bins, 0.0);
        std::size_t n = 0;
        for (std::size_t i = std::size_t(pi); i < m.height; i += std::size_t(P))
            for (std::size_t j = std::size_t(qj); j < m.width; j += std::size_t(Q), ++n) {
                const double t = (double(m.at(i, j)) - lo) / span * double(opts.bins);
                const auto bin = std::size_t(std::clamp(std::floor(t), 0.0, double(opts.bins - 1)));
                h[bin] += 1;
            }
        const double norm = 1.0 + double(opts.bins) * opts.epsilon;
        for (auto& v : h)
            v = (v / double(n) + opts.epsilon) / norm;
        return h;
    };

    double total = 0;
    for (int pi = 0; pi < P; ++pi)
        for (int qj = 0; qj < Q; ++qj) {
            const auto pa = histogram(a, pi, qj), pb = histogram(b, pi, qj);
            double d = 0;
            for (std::size_t i = 0; i < opts.bins; ++i)
                d += pa[i] * std::log(pa[i] / pb[i]);
            total += d;
        }
    return total / double(P * Q);
}

}  // namespace quadlab
