// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <quadlab/cfa.hpp>

#include <doctest.h>

#include <algorithm>
#include <complex>
#include <numbers>

using namespace quadlab;

namespace {

// Layout literals written out by hand, independent of the library tables.
const char* kBayerRows[2] = {"GR", "BG"};
const char* kQuadRows[4] = {"GGRR", "GGRR", "BBGG", "BBGG"};

int channel_of(char c) { return c == 'R' ? 0 : c == 'G' ? 1 : 2; }

std::size_t mirror(long i, std::size_t n)
{
    if (i < 0)
        return std::size_t(-i);
    if (i >= long(n))
        return std::size_t(2 * long(n) - 2 - i);
    return std::size_t(i);
}

}  // namespace

TEST_CASE("canonical patterns")
{
    const auto& b = CfaPattern::bayer();
    REQUIRE(b.period_rows() == 2);
    REQUIRE(b.period_cols() == 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(color_letter(b.at(i, j)) == kBayerRows[i][j]);
    CHECK(std::count(b.labels().begin(), b.labels().end(), Color::G) == 2);

    const auto& q = CfaPattern::quad();
    REQUIRE(q.period_rows() == 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(color_letter(q.at(i, j)) == kQuadRows[i][j]);

    CHECK(CfaPattern::parse("quad") == q);
    CHECK(CfaPattern::parse("GRBG") == b);
    CHECK_THROWS_AS(CfaPattern::parse("GRB"), std::invalid_argument);
    CHECK_THROWS_AS(CfaPattern::parse("GRBX"), std::invalid_argument);
}

TEST_CASE("relative_position is coordinate modulo period")
{
    CHECK(relative_position(0, 0, CfaPattern::quad()) == std::pair{0, 0});
    CHECK(relative_position(5, 7, CfaPattern::quad()) == std::pair{1, 3});
    CHECK(relative_position(6, 3, CfaPattern::bayer()) == std::pair{0, 1});
}

TEST_CASE("mosaic")
{
    SUBCASE("constant gray stays constant")
    {
        const MosaicImage m = mosaic(RgbImage(8, 8, 0.5f), CfaPattern::quad());
        for (float v : m.samples)
            CHECK(v == 0.5f);
        CHECK(m.black_level == 0.f);
        CHECK(m.white_level == 1.f);
    }
    SUBCASE("pure red is the R-site indicator")
    {
        RgbImage red(4, 4);
        std::fill(red.planes[0].begin(), red.planes[0].end(), 1.f);
        const MosaicImage m = mosaic(red, CfaPattern::bayer());
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(m.at(i, j) == (kBayerRows[i % 2][j % 2] == 'R' ? 1.f : 0.f));
    }
    SUBCASE("random quad against a double loop")
    {
        std::mt19937_64 rng(3);
        const RgbImage rgb = test::random_rgb(8, 8, rng);
        const MosaicImage m = mosaic(rgb, CfaPattern::quad());
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                CHECK(m.at(i, j) == rgb.at(channel_of(kQuadRows[i % 4][j % 4]), i, j));
    }
    SUBCASE("size not a multiple of the period")
    {
        CHECK_THROWS_AS(mosaic(RgbImage(6, 8), CfaPattern::quad()), std::invalid_argument);
    }
}

TEST_CASE("fsm of Bayer matches the printed luminance/chrominance formulas")
{
    const auto sym = fsm(CfaPattern::bayer(), {1, 1, 1});
    CHECK(sym.symbolic(0, 0) == "(2G+R+B)/4");

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const double R = u(rng), G = u(rng), B = u(rng);
        const double FL = (2 * G + R + B) / 4, FC1 = (2 * G - R - B) / 8, FC2 = (B - R) / 8;
        const auto m = fsm(CfaPattern::bayer(), {R, G, B});
        const std::complex<double> expected[2][2] = {{FL, 2 * FC2}, {-2 * FC2, 2 * FC1}};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                CHECK(std::abs(m.at(a, b).value - expected[a][b]) < 1e-6);
    }
}

TEST_CASE("fsm numeric value equals its symbolic coefficients and a direct DFT")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (const char* name : {"bayer", "quad"}) {
        const CfaPattern p = CfaPattern::parse(name);
        const int P = p.period_rows(), Q = p.period_cols();
        for (int trial = 0; trial < 100; ++trial) {
            const std::array<double, 3> rgb{u(rng), u(rng), u(rng)};
            const auto m = fsm(p, rgb);
            for (int a = 0; a < P; ++a)
                for (int b = 0; b < Q; ++b) {
                    const auto& e = m.at(a, b);
                    const auto combo = e.coeff[0] * rgb[0] + e.coeff[1] * rgb[1]
                                       + e.coeff[2] * rgb[2];
                    CHECK(std::abs(combo - e.value) < 1e-6);
                    std::complex<double> dft = 0;
                    for (int i = 0; i < P; ++i)
                        for (int j = 0; j < Q; ++j) {
                            const double ang = -2 * std::numbers::pi
                                               * (double(a * i) / P + double(b * j) / Q);
                            dft += rgb[int(p.at(i, j))] * std::polar(1.0, ang);
                        }
                    CHECK(std::abs(dft / double(P * Q) - e.value) < 1e-9);
                }
        }
    }
}

TEST_CASE("fsm of Quad Bayer has a zero row and column at index 2")
{
    const auto m = fsm(CfaPattern::quad(), {0.3, 0.5, 0.2});
    int zeros = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const bool z = m.structural_zero(a, b);
            CHECK(z == (a == 2 || b == 2));
            zeros += z;
        }
    CHECK(zeros == 7);
    CHECK(m.symbolic(0, 0) == "(2G+R+B)/4");
}

TEST_CASE("fsm of a constant pattern is DC only")
{
    const CfaPattern all_g(2, 2, {Color::G, Color::G, Color::G, Color::G});
    const auto m = fsm(all_g, {0.1, 0.7, 0.4});
    CHECK(std::abs(m.at(0, 0).value - 0.7) < 1e-12);
    CHECK(std::abs(m.at(0, 1).value) < 1e-12);
    CHECK(std::abs(m.at(1, 0).value) < 1e-12);
    CHECK(std::abs(m.at(1, 1).value) < 1e-12);
}

TEST_CASE("quad_to_bayer_swap")
{
    // Nearest same-color assignment worked out by hand for the 4x4 tile:
    // destination (row-major) <- source (row-major).
    const std::array<int, 16> hand = {0, 2, 1, 3, 8, 5, 9, 11, 4, 6, 10, 7, 12, 14, 13, 15};
    CHECK(quad_to_bayer_table() == hand);

    SUBCASE("constant")
    {
        const MosaicImage out = quad_to_bayer_swap(MosaicImage(8, 8, CfaPattern::quad(), 0.3f));
        CHECK(out.pattern == CfaPattern::bayer());
        for (float v : out.samples)
            CHECK(v == 0.3f);
    }
    SUBCASE("solid red lands on Bayer R sites")
    {
        RgbImage red(8, 8);
        std::fill(red.planes[0].begin(), red.planes[0].end(), 1.f);
        const MosaicImage out = quad_to_bayer_swap(mosaic(red, CfaPattern::quad()));
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                CHECK((out.at(i, j) != 0.f) == (kBayerRows[i % 2][j % 2] == 'R'));
    }
    SUBCASE("ramp against the hand table")
    {
        RgbImage ramp(8, 8);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j)
                    ramp.at(c, i, j) = float(j) / 8 + float(c) / 100;
        const MosaicImage q = mosaic(ramp, CfaPattern::quad());
        const MosaicImage out = quad_to_bayer_swap(q);
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                const int k = int((i % 4) * 4 + j % 4);
                CHECK(out.at(i, j) == q.at(i - i % 4 + hand[k] / 4, j - j % 4 + hand[k] % 4));
            }
    }
    SUBCASE("per-tile multiset preserved")
    {
        std::mt19937_64 rng(5);
        const MosaicImage q = test::random_mosaic(8, 12, CfaPattern::quad(), rng);
        const MosaicImage out = quad_to_bayer_swap(q);
        for (std::size_t ti = 0; ti < 8; ti += 4)
            for (std::size_t tj = 0; tj < 12; tj += 4) {
                std::vector<float> a, b;
                for (std::size_t k = 0; k < 16; ++k) {
                    a.push_back(q.at(ti + k / 4, tj + k % 4));
                    b.push_back(out.at(ti + k / 4, tj + k % 4));
                }
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                CHECK(a == b);
            }
    }
    CHECK_THROWS_AS(quad_to_bayer_swap(MosaicImage(4, 4, CfaPattern::bayer())),
                    std::invalid_argument);
}

TEST_CASE("bin2x2")
{
    const MosaicImage c = bin2x2(MosaicImage(8, 8, CfaPattern::quad(), 0.5f));
    CHECK(c.height == 4);
    CHECK(c.width == 4);
    CHECK(c.pattern == CfaPattern::bayer());
    for (float v : c.samples)
        CHECK(v == 0.5f);

    MosaicImage one(4, 4, CfaPattern::quad());
    one.at(0, 0) = 1;
    one.at(0, 1) = 2;
    one.at(1, 0) = 3;
    one.at(1, 1) = 4;
    CHECK(bin2x2(one).at(0, 0) == doctest::Approx(2.5));

    std::mt19937_64 rng(8);
    const MosaicImage q = test::random_mosaic(8, 8, CfaPattern::quad(), rng);
    const MosaicImage b = bin2x2(q);
    double sums[3] = {0, 0, 0}, binned[3] = {0, 0, 0};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double mean = (double(q.at(2 * i, 2 * j)) + q.at(2 * i, 2 * j + 1)
                                 + q.at(2 * i + 1, 2 * j) + q.at(2 * i + 1, 2 * j + 1))
                                / 4;
            CHECK(b.at(i, j) == doctest::Approx(mean).epsilon(1e-6));
            binned[channel_of(kBayerRows[i % 2][j % 2])] += b.at(i, j);
        }
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            sums[channel_of(kQuadRows[i % 4][j % 4])] += q.at(i, j);
    // Each binned site stands for four raw samples.
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(binned[c] * 4 - sums[c]) < 1e-5);
    CHECK_THROWS_AS(bin2x2(MosaicImage(4, 4, CfaPattern::bayer())), std::invalid_argument);
}

TEST_CASE("bilinear_demosaic")
{
    SUBCASE("constant gray")
    {
        const RgbImage out = bilinear_demosaic(MosaicImage(6, 6, CfaPattern::bayer(), 0.4f));
        for (const auto& p : out.planes)
            for (float v : p)
                CHECK(v == doctest::Approx(0.4f));
    }
    SUBCASE("per-channel constants are a fixed point")
    {
        RgbImage c(6, 8);
        const float vals[3] = {1.f, 0.25f, 0.6f};
        for (int k = 0; k < 3; ++k)
            std::fill(c.planes[k].begin(), c.planes[k].end(), vals[k]);
        const RgbImage out = bilinear_demosaic(mosaic(c, CfaPattern::bayer()));
        for (int k = 0; k < 3; ++k)
            for (float v : out.planes[k])
                CHECK(v == doctest::Approx(vals[k]));
    }
    SUBCASE("6x6 ramp against a literal stencil")
    {
        RgbImage ramp(6, 6);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 0; j < 6; ++j)
                    ramp.at(c, i, j) = 0.1f * float(i) + 0.03f * float(j) + 0.2f * float(c);
        const MosaicImage m = mosaic(ramp, CfaPattern::bayer());
        const RgbImage out = bilinear_demosaic(m);
        auto color = [](std::size_t i, std::size_t j) {
            return channel_of(kBayerRows[i % 2][j % 2]);
        };
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                for (int c = 0; c < 3; ++c) {
                    double expect;
                    if (color(i, j) == c) {
                        expect = m.at(i, j);
                    } else {
                        double sum = 0;
                        int n = 0;
                        const int cross[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
                        const int diag[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
                        for (const auto* set : {cross, diag}) {
                            for (int k = 0; k < 4; ++k) {
                                const std::size_t y = mirror(long(i) + set[k][0], 6);
                                const std::size_t x = mirror(long(j) + set[k][1], 6);
                                if (color(y, x) == c) {
                                    sum += m.at(y, x);
                                    ++n;
                                }
                            }
                            if (n)
                                break;
                        }
                        expect = sum / n;
                    }
                    CHECK(out.at(c, i, j) == doctest::Approx(expect).epsilon(1e-6));
                }
    }
}
