// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/cfa.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace quadlab {

char color_letter(Color c)
{
    switch (c) {
    case Color::R: return 'R';
    case Color::G: return 'G';
    case Color::B: return 'B';
    }
    return '?';
}

Color color_from_letter(char c)
{
    switch (c) {
    case 'R': case 'r': return Color::R;
    case 'G': case 'g': return Color::G;
    case 'B': case 'b': return Color::B;
    }
    throw std::invalid_argument(std::string("unknown CFA color '") + c + "'");
}

CfaPattern::CfaPattern(int rows, int cols, std::vector<Color> labels, std::string name)
    : rows_(rows), cols_(cols), labels_(std::move(labels)), name_(std::move(name))
{
    if (rows <= 0 || cols <= 0)
        throw std::invalid_argument("CFA period must be positive");
    if (labels_.size() != std::size_t(rows) * std::size_t(cols))
        throw std::invalid_argument("CFA label count does not match period");
    for (Color c : labels_)
        if (c != Color::R && c != Color::G && c != Color::B)
            throw std::invalid_argument("CFA label outside {R,G,B}");
}

const CfaPattern& CfaPattern::bayer()
{
    using enum Color;
    static const CfaPattern p(2, 2, {G, R, B, G}, "bayer");
    return p;
}

const CfaPattern& CfaPattern::quad()
{
    static const CfaPattern p = [] {
        const auto& b = bayer();
        std::vector<Color> labels(16);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                labels[i * 4 + j] = b.at(i / 2, j / 2);
        return CfaPattern(4, 4, std::move(labels), "quad");
    }();
    return p;
}

CfaPattern CfaPattern::parse(const std::string& text)
{
    if (text == "bayer")
        return bayer();
    if (text == "quad")
        return quad();
    const int n = static_cast<int>(std::lround(std::sqrt(double(text.size()))));
    if (text.empty() || std::size_t(n * n) != text.size())
        throw std::invalid_argument("unrecognized CFA pattern '" + text + "'");
    std::vector<Color> labels;
    for (char c : text)
        labels.push_back(color_from_letter(c));
    CfaPattern p(n, n, std::move(labels));
    if (p == bayer())
        return bayer();
    if (p == quad())
        return quad();
    return p;
}

std::string CfaPattern::label_string() const
{
    std::string s;
    for (Color c : labels_)
        s += color_letter(c);
    return s;
}

std::pair<int, int> relative_position(std::size_t i, std::size_t j, const CfaPattern& pattern)
{
    return {int(i % pattern.period_rows()), int(j % pattern.period_cols())};
}

RgbImage::RgbImage(std::size_t h, std::size_t w, float fill)
    : height(h), width(w)
{
    for (auto& p : planes)
        p.assign(h * w, fill);
}

RgbImage RgbImage::crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const
{
    if (row + h > height || col + w > width)
        throw std::invalid_argument("crop outside image");
    RgbImage out(h, w);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < h; ++i)
            std::copy_n(&planes[c][(row + i) * width + col], w, &out.planes[c][i * w]);
    return out;
}

MosaicImage::MosaicImage(std::size_t h, std::size_t w, CfaPattern p, float fill)
    : height(h), width(w), samples(h * w, fill), pattern(std::move(p))
{
}

void MosaicImage::validate() const
{
    if (height == 0 || width == 0)
        throw std::invalid_argument("mosaic has empty extent");
    if (height % pattern.period_rows() || width % pattern.period_cols())
        throw std::invalid_argument("mosaic size " + std::to_string(height) + "x"
                                    + std::to_string(width)
                                    + " is not a multiple of the CFA period");
    if (samples.size() != height * width)
        throw std::invalid_argument("mosaic sample count mismatch");
    if (!(white_level > black_level))
        throw std::invalid_argument("white level must exceed black level");
    for (float v : samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("mosaic holds a non-finite sample");
}

MosaicImage mosaic(const RgbImage& rgb, const CfaPattern& pattern)
{
    if (rgb.height % pattern.period_rows() || rgb.width % pattern.period_cols())
        throw std::invalid_argument("image size is not a multiple of the CFA period");
    MosaicImage out(rgb.height, rgb.width, pattern);
    for (std::size_t i = 0; i < rgb.height; ++i)
        for (std::size_t j = 0; j < rgb.width; ++j)
            out.at(i, j) = rgb.at(int(pattern.color_at(i, j)), i, j);
    return out;
}

// --- frequency structure matrices -------------------------------------------

namespace {

std::vector<std::complex<double>> period_dft(const CfaPattern& p, std::array<double, 3> rgb)
{
    const int P = p.period_rows(), Q = p.period_cols();
    std::vector<std::complex<double>> out(std::size_t(P) * Q);
    const double norm = 1.0 / (P * Q);
    for (int u = 0; u < P; ++u)
        for (int v = 0; v < Q; ++v) {
            std::complex<double> acc = 0;
            for (int i = 0; i < P; ++i)
                for (int j = 0; j < Q; ++j) {
                    // Reduce the phase index first so quarter-turn twiddles are exact.
                    const double turns = double((u * i) % P) / P + double((v * j) % Q) / Q;
                    const double a = -2.0 * std::numbers::pi * turns;
                    acc += rgb[int(p.at(i, j))] * std::polar(1.0, a);
                }
            out[u * Q + v] = acc * norm;
        }
    return out;
}

double snap(double x)
{
    return std::abs(x) < 1e-12 ? 0.0 : x;
}

}  // namespace

FrequencyStructureMatrix fsm(const CfaPattern& pattern, std::array<double, 3> rgb)
{
    FrequencyStructureMatrix m;
    m.rows = pattern.period_rows();
    m.cols = pattern.period_cols();
    m.entries.resize(std::size_t(m.rows) * m.cols);

    const auto value = period_dft(pattern, rgb);
    for (int c = 0; c < 3; ++c) {
        std::array<double, 3> basis{};
        basis[c] = 1.0;
        const auto coeff = period_dft(pattern, basis);
        for (std::size_t k = 0; k < coeff.size(); ++k)
            m.entries[k].coeff[c] = {snap(coeff[k].real()), snap(coeff[k].imag())};
    }
    for (std::size_t k = 0; k < value.size(); ++k)
        m.entries[k].value = {snap(value[k].real()), snap(value[k].imag())};
    return m;
}

namespace {

// Formats a real linear combination of R, G, B with integer numerators over
// `denom`, reduced by the common gcd, e.g. "(2G+R+B)/4". Positive terms are
// listed first, each group in G, R, B order.
std::string format_combination(std::array<long, 3> num, long denom)
{
    long g = denom;
    for (long n : num)
        g = std::gcd(g, std::abs(n));
    for (auto& n : num)
        n /= g;
    denom /= g;

    static constexpr std::array<int, 3> order{1, 0, 2};  // G, R, B
    std::string body;
    int terms = 0;
    for (int pass = 0; pass < 2; ++pass)
        for (int c : order) {
            const long n = num[c];
            if (n == 0 || (pass == 0) != (n > 0))
                continue;
            if (n < 0)
                body += "-";
            else if (terms > 0)
                body += "+";
            if (std::abs(n) != 1)
                body += std::to_string(std::abs(n));
            body += color_letter(Color(c));
            ++terms;
        }
    if (terms == 0)
        return "0";
    if (denom == 1)
        return terms > 1 ? "(" + body + ")" : body;
    return "(" + body + ")/" + std::to_string(denom);
}

}  // namespace

std::string FrequencyStructureMatrix::symbolic(int u, int v) const
{
    const FsmEntry& e = at(u, v);
    const long denom = long(rows) * cols;
    std::array<long, 3> re{}, im{};
    for (int c = 0; c < 3; ++c) {
        re[c] = std::lround(e.coeff[c].real() * denom);
        im[c] = std::lround(e.coeff[c].imag() * denom);
    }
    const bool has_re = std::any_of(re.begin(), re.end(), [](long x) { return x != 0; });
    const bool has_im = std::any_of(im.begin(), im.end(), [](long x) { return x != 0; });
    if (!has_re && !has_im)
        return "0";
    std::string s;
    if (has_re)
        s = format_combination(re, denom);
    if (has_im) {
        std::string t = format_combination(im, denom);
        s += (has_re ? " + i" : "i") + t;
    }
    return s;
}

bool FrequencyStructureMatrix::structural_zero(int u, int v, double tol) const
{
    const FsmEntry& e = at(u, v);
    for (const auto& c : e.coeff)
        if (std::abs(c) > tol)
            return false;
    return std::abs(e.value) <= tol;
}

// --- remosaic / binning / demosaic ----------------------------------------

const std::array<int, 16>& quad_to_bayer_table()
{
    // Optimal same-color assignment minimizing total squared displacement;
    // among optimal assignments the lexicographically first wins.
    static const std::array<int, 16> table = [] {
        const CfaPattern& quad = CfaPattern::quad();
        const CfaPattern& bayer = CfaPattern::bayer();
        std::array<int, 16> t{};
        for (int c = 0; c < 3; ++c) {
            std::vector<int> src, dst;
            for (int k = 0; k < 16; ++k) {
                if (quad.at(k / 4, k % 4) == Color(c))
                    src.push_back(k);
                if (bayer.color_at(k / 4, k % 4) == Color(c))
                    dst.push_back(k);
            }
            std::vector<int> perm(dst.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::vector<int> best = perm;
            long best_cost = -1;
            do {
                long cost = 0;
                for (std::size_t s = 0; s < src.size(); ++s) {
                    const int d = dst[perm[s]];
                    const int di = src[s] / 4 - d / 4, dj = src[s] % 4 - d % 4;
                    cost += di * di + dj * dj;
                }
                if (best_cost < 0 || cost < best_cost) {
                    best_cost = cost;
                    best = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            for (std::size_t s = 0; s < src.size(); ++s)
                t[dst[best[s]]] = src[s];
        }
        return t;
    }();
    return table;
}

namespace {

void require_quad(const MosaicImage& m, const char* op)
{
    if (!(m.pattern == CfaPattern::quad()))
        throw std::invalid_argument(std::string(op) + " expects a Quad Bayer mosaic, got '"
                                    + m.pattern.label_string() + "'");
    m.validate();
}

}  // namespace

MosaicImage quad_to_bayer_swap(const MosaicImage& quad)
{
    require_quad(quad, "quad_to_bayer_swap");
    const auto& table = quad_to_bayer_table();
    MosaicImage out(quad.height, quad.width, CfaPattern::bayer());
    out.black_level = quad.black_level;
    out.white_level = quad.white_level;
    for (std::size_t ti = 0; ti < quad.height; ti += 4)
        for (std::size_t tj = 0; tj < quad.width; tj += 4)
            for (int k = 0; k < 16; ++k) {
                const int s = table[k];
                out.at(ti + k / 4, tj + k % 4) = quad.at(ti + s / 4, tj + s % 4);
            }
    return out;
}

MosaicImage bin2x2(const MosaicImage& quad)
{
    require_quad(quad, "bin2x2");
    MosaicImage out(quad.height / 2, quad.width / 2, CfaPattern::bayer());
    out.black_level = quad.black_level;
    out.white_level = quad.white_level;
    for (std::size_t i = 0; i < out.height; ++i)
        for (std::size_t j = 0; j < out.width; ++j) {
            const float s = quad.at(2 * i, 2 * j) + quad.at(2 * i, 2 * j + 1)
                          + quad.at(2 * i + 1, 2 * j) + quad.at(2 * i + 1, 2 * j + 1);
            out.at(i, j) = 0.25f * s;
        }
    return out;
}

namespace {

// Mirror about the edge pixel; preserves index parity and hence CFA color.
long mirror(long x, long n)
{
    if (n == 1)
        return 0;
    while (x < 0 || x >= n) {
        if (x < 0)
            x = -x;
        if (x >= n)
            x = 2 * (n - 1) - x;
    }
    return x;
}

}  // namespace

RgbImage bilinear_demosaic(const MosaicImage& bayer)
{
    const CfaPattern& p = bayer.pattern;
    if (p.period_rows() != 2 || p.period_cols() != 2)
        throw std::invalid_argument("bilinear_demosaic expects a 2x2 Bayer-type pattern");
    bayer.validate();
    const long H = long(bayer.height), W = long(bayer.width);
    RgbImage out(bayer.height, bayer.width);

    static constexpr int cross[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    static constexpr int diag[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

    auto label = [&](long i, long j) {
        return p.at(int(((i % 2) + 2) % 2), int(((j % 2) + 2) % 2));
    };
    auto sample = [&](long i, long j) { return bayer.at(mirror(i, H), mirror(j, W)); };

    for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
            const Color here = label(i, j);
            for (int c = 0; c < 3; ++c) {
                if (Color(c) == here) {
                    out.at(c, i, j) = bayer.at(i, j);
                    continue;
                }
                float sum = 0.f;
                int n = 0;
                for (const auto& d : cross)
                    if (label(i + d[0], j + d[1]) == Color(c)) {
                        sum += sample(i + d[0], j + d[1]);
                        ++n;
                    }
                if (n == 0)
                    for (const auto& d : diag)
                        if (label(i + d[0], j + d[1]) == Color(c)) {
                            sum += sample(i + d[0], j + d[1]);
                            ++n;
                        }
                out.at(c, i, j) = n ? sum / float(n) : 0.f;
            }
        }
    return out;
}

}  // namespace quadlab
