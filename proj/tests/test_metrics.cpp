// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <quadlab/metrics.hpp>
#include <quadlab/raw_sim.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace quadlab;
using test::random_mosaic;
using test::random_rgb;

TEST_CASE("psnr")
{
    std::mt19937_64 rng(1);
    MosaicImage a = random_mosaic(32, 32, CfaPattern::bayer(), rng);
    for (auto& v : a.samples)
        v *= 0.8f;
    CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());

    MosaicImage b = a;
    for (auto& v : b.samples)
        v += 0.1f;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-3 / 20));
    CHECK(std::abs(psnr(a, b) - 20.0) <= 1e-3);

    SUBCASE("against an explicit mean squared error")
    {
        const MosaicImage c = random_mosaic(32, 32, CfaPattern::bayer(), rng);
        double sse = 0;
        for (std::size_t i = 0; i < 32; ++i)
            for (std::size_t j = 0; j < 32; ++j)
                sse += std::pow(double(a.at(i, j)) - c.at(i, j), 2);
        CHECK(psnr(a, c) == doctest::Approx(-10 * std::log10(sse / 1024)).epsilon(1e-12));
        MosaicImage c10 = c;
        c10.white_level = 10;
        CHECK(psnr(a, c10) == doctest::Approx(psnr(a, c) + 20).epsilon(1e-12));
    }
    SUBCASE("decreases with noise")
    {
        double prev = std::numeric_limits<double>::infinity();
        for (double db : {0.0, 12.0, 24.0, 42.0}) {
            NoiseParams n;
            n.gain_db = db;
            n.seed = 3;
            const double p = psnr(add_noise(a, n), a);
            CHECK(p < prev);
            prev = p;
        }
    }
    SUBCASE("rgb")
    {
        const RgbImage x = random_rgb(8, 8, rng);
        RgbImage y = x;
        y.at(1, 3, 3) += 0.5f;
        CHECK(psnr(x, y) == doctest::Approx(-10 * std::log10(0.25 / 192)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(psnr(a, MosaicImage(16, 32, CfaPattern::bayer())), std::invalid_argument);
}

TEST_CASE("ssim")
{
    std::mt19937_64 rng(2);
    const RgbImage a = random_rgb(24, 20, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("inverted binary image")
    {
        RgbImage x(16, 16), y(16, 16);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 16; ++i)
                for (std::size_t j = 0; j < 16; ++j) {
                    x.at(c, i, j) = float((i / 3 + j / 5) % 2);
                    y.at(c, i, j) = 1.f - x.at(c, i, j);
                }
        CHECK(ssim(x, y) < 0.0);
    }
    SUBCASE("constant images reduce to the luminance term")
    {
        for (auto [p, q] : {std::pair{0.2f, 0.7f}, std::pair{0.5f, 0.5f}, std::pair{0.9f, 0.1f}}) {
            const RgbImage x(12, 12, p), y(12, 12, q);
            const double c1 = 1e-4;
            const double want = (2.0 * p * q + c1) / (double(p) * p + double(q) * q + c1);
            CHECK(ssim(x, y) == doctest::Approx(want).epsilon(1e-9));
        }
    }
    SUBCASE("noise lowers the score")
    {
        RgbImage b = a;
        std::normal_distribution<float> n(0.f, 0.05f);
        for (auto& p : b.planes)
            for (auto& v : p)
                v += n(rng);
        const double s = ssim(a, b);
        CHECK(s < 1.0);
        CHECK(s > 0.0);
    }
    CHECK_THROWS_AS(ssim(RgbImage(8, 8), RgbImage(8, 8)), std::invalid_argument);
}

TEST_CASE("kld")
{
    std::mt19937_64 rng(3);
    const MosaicImage a = random_mosaic(32, 32, CfaPattern::bayer(), rng);
    CHECK(kld(a, a) == 0.0);

    SUBCASE("non-negative and asymmetric")
    {
        for (int k = 0; k < 5; ++k) {
            MosaicImage b = random_mosaic(32, 32, CfaPattern::bayer(), rng);
            for (auto& v : b.samples)
                v *= v;
            CHECK(kld(a, b) > 0.0);
            CHECK(kld(b, a) > 0.0);
            CHECK(kld(a, b) != kld(b, a));
        }
    }
    SUBCASE("disjoint two-bin hand value")
    {
        const MosaicImage lo(8, 8, CfaPattern::bayer(), 0.1f), hi(8, 8, CfaPattern::bayer(), 0.9f);
        KldOptions o;
        o.bins = 2;
        o.epsilon = 1e-3;
        // Each phase: p = [1+e, e]/(1+2e), q reversed; KL = log((1+e)/e)/(1+2e).
        const double want = std::log(1.001 / 0.001) / 1.002;
        CHECK(kld(lo, hi, o) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("phases are compared separately")
    {
        // Same global histogram, colors swapped between phases.
        MosaicImage x(8, 8, CfaPattern::bayer()), y(8, 8, CfaPattern::bayer());
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                x.at(i, j) = (i % 2 == 0) ? 0.2f : 0.8f;
                y.at(i, j) = (i % 2 == 0) ? 0.8f : 0.2f;
            }
        CHECK(kld(x, y) > 1.0);
    }
    CHECK_THROWS_AS(kld(a, MosaicImage(32, 32, CfaPattern::quad())), std::invalid_argument);
}
