// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "cli.hpp"

#include <quadlab/config.hpp>
#include <quadlab/io.hpp>
#include <quadlab/metrics.hpp>
#include <quadlab/mining.hpp>
#include <quadlab/synth.hpp>

#include <doctest.h>

#include <sstream>

using namespace quadlab;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result quadlab_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "quadlab");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* kTinyConfig = "# small network for fast tests\n"
                          "channels = 4\n"
                          "window = 4\n"
                          "heads = 1\n"
                          "patch = 32\n"
                          "batch = 1\n"
                          "steps = 3\n";

}  // namespace

TEST_CASE("simulate")
{
    const fs::path dir = test::scratch_dir("cli_simulate");
    const RgbImage img = synth_scene(16, 24, 1);
    write_png(dir / "scene.png", img);
    const std::string in = (dir / "scene.png").string();

    SUBCASE("zero noise gives the clean mosaic")
    {
        const Result r = quadlab_run({"simulate", "--input", in, "--pattern", "quad",
                                      "--read-sigma", "0", "--shot-scale", "0", "--noise-db", "24",
                                      "--out", (dir / "q.pgm").string()});
        REQUIRE(r.code == 0);
        const MosaicImage m = read_mosaic(dir / "q.pgm");
        CHECK(m.pattern == CfaPattern::quad());
        const MosaicImage want = mosaic(read_png(dir / "scene.png"), CfaPattern::quad());
        for (std::size_t i = 0; i < m.samples.size(); ++i)
            CHECK(std::abs(m.samples[i] - want.samples[i]) <= 1e-5);
    }
    SUBCASE("same seed, same bytes; other seed, other bytes")
    {
        for (const char* name : {"a.pgm", "b.pgm"})
            REQUIRE(quadlab_run({"simulate", "--input", in, "--noise-db", "24", "--seed", "5",
                                 "--out", (dir / name).string()})
                        .code == 0);
        REQUIRE(quadlab_run({"simulate", "--input", in, "--noise-db", "24", "--seed", "6",
                             "--out", (dir / "c.pgm").string()})
                    .code == 0);
        CHECK(read_file(dir / "a.pgm") == read_file(dir / "b.pgm"));
        CHECK(read_file(dir / "a.pgm") != read_file(dir / "c.pgm"));
    }
    SUBCASE("errors")
    {
        const Result missing = quadlab_run(
            {"simulate", "--input", (dir / "nope.png").string(), "--out", (dir / "x.pgm").string()});
        CHECK(missing.code == 2);
        CHECK(missing.err.find("data error") == 0);
        CHECK(quadlab_run({"simulate", "--input", in, "--pattern", "xyz", "--out", "x.pgm"}).code
              == 1);
        CHECK(quadlab_run({"simulate", "--input", in, "--read-sigma", "-1", "--out", "x.pgm"}).code
              == 1);
        CHECK(quadlab_run({"simulate", "--input", in}).code == 1);
        write_png(dir / "odd.png", synth_scene(18, 16, 1));
        CHECK(quadlab_run({"simulate", "--input", (dir / "odd.png").string(), "--out",
                           (dir / "o.pgm").string()})
                  .code
              == 2);
    }
}

TEST_CASE("train and remosaic")
{
    const fs::path dir = test::scratch_dir("cli_train");
    fs::create_directories(dir / "corpus");
    for (int i = 0; i < 3; ++i)
        write_png(dir / "corpus" / ("img" + std::to_string(i) + ".png"),
                  synth_scene(48, 48, 20 + i));
    write_file_atomic(dir / "tiny.cfg", kTinyConfig);
    const std::string corpus = (dir / "corpus").string(), cfg = (dir / "tiny.cfg").string();

    const Result t1 = quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--out",
                                   (dir / "m1.ckpt").string()});
    REQUIRE(t1.code == 0);
    const Result t2 = quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--out",
                                   (dir / "m2.ckpt").string(), "--loss-csv",
                                   (dir / "curve.csv").string()});
    REQUIRE(t2.code == 0);
    CHECK(read_file(dir / "m1.ckpt") == read_file(dir / "m2.ckpt"));
    const std::string curve = read_file(dir / "curve.csv");
    CHECK(read_file(dir / "m1.ckpt.loss.csv") == curve);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 4);

    SUBCASE("overrides and zero steps")
    {
        REQUIRE(quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--steps", "0",
                             "--out", (dir / "m0.ckpt").string()})
                    .code
                == 0);
        CHECK(read_file(dir / "m0.ckpt.loss.csv") == "step,l1_term,fft_term,total\n");
        REQUIRE(quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--seed", "9",
                             "--out", (dir / "m9.ckpt").string()})
                    .code
                == 0);
        CHECK(read_file(dir / "m9.ckpt") != read_file(dir / "m1.ckpt"));
    }
    SUBCASE("fine-tuning from a checkpoint with a hard manifest")
    {
        write_file_atomic(dir / "hard.csv",
                          "image_id,row,col,size,moire,zipper,rank\nimg1,8,8,40,1,1,2\n");
        const Result r = quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--init",
                                      (dir / "m1.ckpt").string(), "--hard-manifest",
                                      (dir / "hard.csv").string(), "--out",
                                      (dir / "ft.ckpt").string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("+ 1 hard regions") != std::string::npos);
        write_file_atomic(dir / "bad_hard.csv",
                          "image_id,row,col,size,moire,zipper,rank\nother,0,0,32,1,1,2\n");
        CHECK(quadlab_run({"train", "--corpus", corpus, "--config", cfg, "--hard-manifest",
                           (dir / "bad_hard.csv").string(), "--out", (dir / "x.ckpt").string()})
                  .code
              == 2);
    }
    SUBCASE("bad configs name the key")
    {
        write_file_atomic(dir / "bad.cfg", "channels = 4\nlearning_rate = 0.1\n");
        const Result r = quadlab_run({"train", "--corpus", corpus, "--config",
                                      (dir / "bad.cfg").string(), "--out",
                                      (dir / "x.ckpt").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("learning_rate") != std::string::npos);
        write_file_atomic(dir / "bad2.cfg", "patch = 40\n");
        CHECK(quadlab_run({"train", "--corpus", corpus, "--config", (dir / "bad2.cfg").string(),
                           "--out", (dir / "x.ckpt").string()})
                  .code
              == 2);
        CHECK(quadlab_run({"train", "--corpus", (dir / "empty").string(), "--config", cfg,
                           "--out", (dir / "x.ckpt").string()})
                  .code
              == 2);
    }
    SUBCASE("remosaic methods")
    {
        MosaicImage q = mosaic(synth_scene(32, 64, 4), CfaPattern::quad());
        write_mosaic(dir / "q.pgm", q);
        const std::string in = (dir / "q.pgm").string();
        for (const char* method : {"swap", "bin2x2"})
            REQUIRE(quadlab_run({"remosaic", "--input", in, "--method", method, "--out",
                                 (dir / (std::string(method) + ".pgm")).string()})
                        .code
                    == 0);
        const MosaicImage swap = read_mosaic(dir / "swap.pgm");
        CHECK(swap.pattern == CfaPattern::bayer());
        CHECK(swap.height == 32);
        const MosaicImage bin = read_mosaic(dir / "bin2x2.pgm");
        CHECK(bin.height == 16);
        CHECK(bin.width == 32);

        REQUIRE(quadlab_run({"remosaic", "--input", in, "--method", "djrd", "--checkpoint",
                             (dir / "m1.ckpt").string(), "--out", (dir / "d.pgm").string()})
                    .code
                == 0);
        const MosaicImage d = read_mosaic(dir / "d.pgm");
        CHECK(d.pattern == CfaPattern::bayer());
        CHECK(d.width == 64);

        CHECK(quadlab_run({"remosaic", "--input", in, "--method", "djrd", "--out", "x.pgm"}).code
              == 1);
        CHECK(quadlab_run({"remosaic", "--input", in, "--method", "magic", "--out", "x.pgm"}).code
              == 1);
        CHECK(quadlab_run({"remosaic", "--input", (dir / "swap.pgm").string(), "--method", "swap",
                           "--out", "x.pgm"})
                  .code
              == 2);
        write_mosaic(dir / "q48.pgm", mosaic(synth_scene(48, 48, 4), CfaPattern::quad()));
        CHECK(quadlab_run({"remosaic", "--input", (dir / "q48.pgm").string(), "--method", "djrd",
                           "--checkpoint", (dir / "m1.ckpt").string(), "--out", "x.pgm"})
                  .code
              == 2);
    }
}

TEST_CASE("mine")
{
    const fs::path dir = test::scratch_dir("cli_mine");
    fs::create_directories(dir / "pairs");
    for (int i = 0; i < 2; ++i) {
        const RgbImage gt = synth_texture(128, 128, 30 + i);
        RgbImage ci = gt;
        if (i == 1)
            inject_zone_plate(ci, 64, 0, 64, 0.2f);
        write_png(dir / "pairs" / ("p" + std::to_string(i) + ".ci.png"), ci);
        write_png(dir / "pairs" / ("p" + std::to_string(i) + ".gt.png"), gt);
    }
    const std::string pairs = (dir / "pairs").string();
    for (const char* name : {"m1.csv", "m2.csv"})
        REQUIRE(quadlab_run({"mine", "--pairs", pairs, "--k", "3", "--patch", "64", "--out",
                             (dir / name).string()})
                    .code
                == 0);
    const std::string manifest = read_file(dir / "m1.csv");
    CHECK(manifest == read_file(dir / "m2.csv"));
    const auto rows = parse_manifest(manifest);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].image_id == "p1");
    CHECK(rows[0].row == 64);
    CHECK(rows[0].col == 0);
    CHECK(fs::exists(dir / "crops" / "p1_64_0.ci.png"));
    CHECK(fs::exists(dir / "crops" / "p1_64_0.gt.png"));
    CHECK(fs::exists(dir / "crops" / "p1_64_0.quad.pgm"));

    const Result many = quadlab_run(
        {"mine", "--pairs", pairs, "--patch", "64", "--out", (dir / "all.csv").string()});
    CHECK(many.code == 0);
    CHECK(many.out.find("fewer than k=2000") != std::string::npos);

    fs::remove(dir / "pairs" / "p0.gt.png");
    CHECK(quadlab_run({"mine", "--pairs", pairs, "--out", (dir / "x.csv").string()}).code == 2);
    CHECK(quadlab_run({"mine", "--pairs", (dir / "none").string(), "--out", "x.csv"}).code == 2);
}

TEST_CASE("evaluate")
{
    const fs::path dir = test::scratch_dir("cli_evaluate");
    fs::create_directories(dir / "pred");
    fs::create_directories(dir / "gt");
    std::mt19937_64 rng(4);
    for (const char* id : {"a", "b"}) {
        const MosaicImage m = mosaic(synth_scene(32, 32, id[0]), CfaPattern::bayer());
        write_mosaic(dir / "pred" / (std::string(id) + ".pgm"), m);
        write_mosaic(dir / "gt" / (std::string(id) + ".pgm"), m);
    }
    const std::string pred = (dir / "pred").string(), gt = (dir / "gt").string();

    REQUIRE(quadlab_run({"evaluate", "--pred", pred, "--gt", gt, "--out",
                         (dir / "bayer.csv").string()})
                .code
            == 0);
    CHECK(read_file(dir / "bayer.csv")
          == "image_id,domain,psnr,ssim,kld\na,bayer,inf,,0\nb,bayer,inf,,0\nmean,bayer,inf,,0\n");
    REQUIRE(quadlab_run({"evaluate", "--pred", pred, "--gt", gt, "--domain", "srgb", "--out",
                         (dir / "srgb.csv").string()})
                .code
            == 0);
    CHECK(read_file(dir / "srgb.csv")
          == "image_id,domain,psnr,ssim,kld\na,srgb,inf,1,\nb,srgb,inf,1,\nmean,srgb,inf,1,\n");

    MosaicImage off = read_mosaic(dir / "gt" / "a.pgm");
    for (auto& v : off.samples)
        v = std::min(v, 0.85f) + 0.1f;
    MosaicImage ref = off;
    for (auto& v : ref.samples)
        v -= 0.1f;
    write_mosaic(dir / "pred" / "a.pgm", off);
    write_mosaic(dir / "gt" / "a.pgm", ref);
    REQUIRE(quadlab_run({"evaluate", "--pred", pred, "--gt", gt, "--out",
                         (dir / "off.csv").string()})
                .code
            == 0);
    const std::string off_csv = read_file(dir / "off.csv");
    const auto at = off_csv.find("\na,bayer,");
    REQUIRE(at != std::string::npos);
    // 16-bit files quantize both sides, so allow a few codes of slack.
    CHECK(std::stod(off_csv.substr(at + 9)) == doctest::Approx(20.0).epsilon(1e-4));

    fs::remove(dir / "gt" / "b.pgm");
    const Result r =
        quadlab_run({"evaluate", "--pred", pred, "--gt", gt, "--out", (dir / "x.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("counts differ") != std::string::npos);
    CHECK(quadlab_run({"evaluate", "--pred", pred, "--gt", gt, "--domain", "xyz", "--out", "x"})
              .code
          == 1);
}

TEST_CASE("analyze-fsm")
{
    const Result q = quadlab_run({"analyze-fsm", "--pattern", "quad", "--triple", "0.3,0.5,0.2"});
    REQUIRE(q.code == 0);
    CHECK(q.out.find("structural zeros: 7") != std::string::npos);
    CHECK(q.out.find("zero row: 2") != std::string::npos);
    CHECK(q.out.find("zero column: 2") != std::string::npos);

    const Result b = quadlab_run({"analyze-fsm"});
    REQUIRE(b.code == 0);
    CHECK(b.out.find("zero row") == std::string::npos);

    CHECK(quadlab_run({"analyze-fsm", "--triple", "1,2"}).code == 1);
    CHECK(quadlab_run({"analyze-fsm", "--triple", "1,x,2"}).code == 1);
    CHECK(quadlab_run({"analyze-fsm", "--triple", "1,2,3,4"}).code == 1);
    CHECK(quadlab_run({"analyze-fsm", "--pattern", "nope"}).code == 1);
}

TEST_CASE("top level")
{
    CHECK(quadlab_run({}).code == 1);
    CHECK(quadlab_run({"frobnicate"}).code == 1);
    const Result h = quadlab_run({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("simulate") != std::string::npos);
}

TEST_CASE("config files")
{
    const TrainConfig c = apply_train_config(kTinyConfig, "tiny");
    CHECK(c.model.channels == 4);
    CHECK(c.patch == 32);
    CHECK(c.steps == 3);
    CHECK(c.adam.lr == TrainConfig{}.adam.lr);
    const auto kv = parse_key_values("a = 1\n\n  # note\nb=two words # trailing\n", "t");
    REQUIRE(kv.size() == 2);
    CHECK(kv[1].first == "b");
    CHECK_THROWS_AS(apply_train_config("lr = fast\n", "t"), DataError);
    CHECK_THROWS_AS(parse_key_values("just a line\n", "t"), DataError);
    CHECK_THROWS_AS(load_train_config("/nonexistent/x.cfg"), DataError);
}
