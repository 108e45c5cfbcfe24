// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Criterion numbers given on the command
// line restrict the run to those.

#include "grad_suite.hpp"
#include "support.hpp"

#include "cli.hpp"

#include <quadlab/io.hpp>
#include <quadlab/metrics.hpp>
#include <quadlab/mining.hpp>
#include <quadlab/nn/kernels.hpp>
#include <quadlab/synth.hpp>
#include <quadlab/training.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

using namespace quadlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// --- 1 ------------------------------------------------------------------------

Outcome gradients()
{
    const auto t0 = Clock::now();
    std::size_t runs = 0;
    double worst = 0;
    std::string worst_name, failures;
    for (const auto& c : test::gradient_suite())
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto r = c.run(seed);
            ++runs;
            if (r.max_rel_error > worst || !r.finite) {
                worst = r.finite ? r.max_rel_error : INFINITY;
                worst_name = c.name;
            }
            if (!r.finite || r.max_rel_error > 1e-3)
                failures += " " + c.name + "/" + std::to_string(seed);
        }
    const double secs = seconds_since(t0);
    const bool ok = failures.empty() && secs < 60;
    return {ok, format("%zu checks, worst rel error %.2e (%s), %.1f s%s", runs, worst,
                       worst_name.c_str(), secs, failures.empty() ? "" : (" failed:" + failures).c_str())};
}

// --- 2 ------------------------------------------------------------------------

Outcome wavelet()
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    float worst = 0;
    for (int k = 0; k < 100; ++k) {
        const Tensor x = test::random_tensor({dim(rng), dim(rng), 2 * dim(rng), 2 * dim(rng)}, rng);
        worst = std::max(worst, max_abs_diff(nn::haar_iwt(nn::haar_dwt(x)), x));
    }
    return {worst <= 1e-6f, format("100 tensors, max |iwt(dwt(x)) - x| = %.2e", double(worst))};
}

// --- 3 ------------------------------------------------------------------------

Outcome fsm_structure()
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const double R = u(rng), G = u(rng), B = u(rng);
        const double L = (2 * G + R + B) / 4, C1 = (2 * G - R - B) / 8, C2 = (B - R) / 8;
        const std::complex<double> want[2][2] = {{L, 2 * C2}, {-2 * C2, 2 * C1}};
        const auto m = fsm(CfaPattern::bayer(), {R, G, B});
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                worst = std::max(worst, std::abs(m.at(a, b).value - want[a][b]));
    }
    const auto q = fsm(CfaPattern::quad(), {u(rng), u(rng), u(rng)});
    int zeros = 0;
    bool layout = true;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const bool z = q.structural_zero(a, b);
            zeros += z;
            layout = layout && z == (a == 2 || b == 2);
        }
    return {worst <= 1e-6 && zeros == 7 && layout,
            format("Bayer max error %.2e over 100 triples; Quad %d structural zeros, %s", worst,
                   zeros, layout ? "exactly row 2 and column 2" : "unexpected layout")};
}

// --- 4 ------------------------------------------------------------------------

Outcome periodicity()
{
    std::mt19937_64 rng(4);
    const CfaPattern& quad = CfaPattern::quad();
    float shift_err = 0, collapse_err = 0;
    for (int k = 0; k < 10; ++k) {
        const Tensor banks = test::random_tensor({4, 4, 3, 2, 3, 3}, rng);
        const Tensor bias = test::random_tensor({3}, rng);
        const Tensor x = test::random_tensor({2, 2, 16, 12}, rng);
        Tensor shifted(x.shape());
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < 16; ++i)
                    for (std::size_t j = 0; j < 12; ++j)
                        shifted.at(n, c, (i + 4) % 16, (j + 4 * (k % 2)) % 12) = x.at(n, c, i, j);
        const Tensor a = nn::cfa_conv(x, quad, banks, bias, nn::Padding::periodic);
        const Tensor b = nn::cfa_conv(shifted, quad, banks, bias, nn::Padding::periodic);
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t o = 0; o < 3; ++o)
                for (std::size_t i = 0; i < 16; ++i)
                    for (std::size_t j = 0; j < 12; ++j)
                        shift_err = std::max(
                            shift_err, std::abs(b.at(n, o, (i + 4) % 16, (j + 4 * (k % 2)) % 12)
                                                - a.at(n, o, i, j)));

        const Tensor w = test::random_tensor({3, 2, 3, 3}, rng);
        Tensor same_banks({4, 4, 3, 2, 3, 3});
        for (std::size_t p = 0; p < 16; ++p)
            std::copy(w.data(), w.data() + w.size(), same_banks.data() + p * w.size());
        collapse_err = std::max(collapse_err,
                                max_abs_diff(nn::cfa_conv(x, quad, same_banks, bias),
                                             nn::conv2d(x, w, bias, nn::same(3))));
    }
    return {shift_err <= 1e-5f && collapse_err <= 1e-6f,
            format("shift-by-4 max error %.2e, collapsed banks vs conv2d %.2e",
                   double(shift_err), double(collapse_err))};
}

// --- 5 and 6 ------------------------------------------------------------------

std::optional<ModelState> g_trained;

Outcome toy_training()
{
    const auto t0 = Clock::now();
    TrainConfig cfg;
    cfg.model.channels = 8;
    cfg.steps = 500;
    cfg.batch = 4;
    cfg.patch = 64;
    cfg.noise_db = 24;
    std::vector<RgbImage> corpus;
    for (int i = 0; i < 16; ++i)
        corpus.push_back(synth_scene(64, 64, 100 + i));

    // Loss over the whole corpus with fixed noise draws, before and after.
    NoiseParams np;
    np.gain_db = cfg.noise_db;
    np.read_sigma_base = cfg.read_sigma;
    np.shot_scale_base = cfg.shot_scale;
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 16; ++i) {
        np.seed = 1000 + i;
        pairs.push_back(make_pair(corpus[i], np));
    }
    const TrainingPair eval = stack_pairs(pairs);
    auto eval_loss = [&](const ModelState& s) {
        return loss(model_forward(s.params, s.config, eval.input), eval.target, cfg.loss).total;
    };

    const double before = eval_loss(init_model(cfg.model, cfg.seed));
    const FitResult fit = fit_toy(corpus, cfg);
    const double after = eval_loss(fit.state);

    const RgbImage held = synth_scene(64, 64, 7777);
    np.seed = 4242;
    const MosaicImage q = add_noise(mosaic(held, CfaPattern::quad()), np);
    const MosaicImage gt = mosaic(held, CfaPattern::bayer());
    const double model_db = psnr(forward(q, fit.state), gt);
    const double swap_db = psnr(quad_to_bayer_swap(q), gt);
    const double secs = seconds_since(t0);
    g_trained = fit.state;

    const double drop = 1 - after / before;
    return {drop >= 0.5 && model_db > swap_db && secs < 600,
            format("loss %.4f -> %.4f (%.1f%% drop); held-out PSNR model %.2f dB vs swap %.2f "
                   "dB; %.0f s",
                   before, after, 100 * drop, model_db, swap_db, secs)};
}

Outcome noise_trend()
{
    if (!g_trained)
        toy_training();
    if (!g_trained)
        return {false, "no trained model"};
    const RgbImage img = synth_scene(128, 128, 2024);
    const MosaicImage clean_quad = mosaic(img, CfaPattern::quad());
    const MosaicImage gt = mosaic(img, CfaPattern::bayer());
    double prev_psnr = INFINITY, prev_kld = -1;
    bool ok = true;
    std::string model, input;
    for (double db : kNoiseLevelsDb) {
        NoiseParams np;
        np.gain_db = db;
        np.seed = 606;
        const MosaicImage noisy = add_noise(clean_quad, np);
        const MosaicImage out = forward(noisy, *g_trained);
        const double p = psnr(out, gt), k = kld(out, gt);
        ok = ok && p < prev_psnr && k > prev_kld;
        prev_psnr = p;
        prev_kld = k;
        model += format("%s%g dB %.2f/%.4f", model.empty() ? "" : ", ", db, p, k);
        // Context only: the same levels through the fixed swap remosaic.
        const MosaicImage sw = quad_to_bayer_swap(noisy);
        input += format("%s%g dB %.2f/%.4f", input.empty() ? "" : ", ", db, psnr(sw, gt),
                        kld(sw, gt));
    }
    return {ok, "network PSNR/KLD: " + model + "; swap on the noisy input: " + input};
}

// --- 7 ------------------------------------------------------------------------

Outcome mining()
{
    std::vector<ImagePair> corpus;
    for (int i = 0; i < 20; ++i) {
        const RgbImage gt = synth_texture(256, 256, 500 + i);
        // The reconstruction is a plain bilinear demosaic of the Bayer mosaic.
        corpus.push_back({format("img%02d", i), bilinear_demosaic(mosaic(gt, CfaPattern::bayer())),
                          gt});
    }
    // Artifacts of comparable strength, each filling one window of a
    // non-overlapping grid.
    inject_zone_plate(corpus[6].ci, 128, 128, 128, 0.05f);
    inject_zipper(corpus[13].ci, 128, 0, 128, 0.2f);

    const MiningResult r = select_hard_patches(corpus, 3, 128, 128);
    auto rank_of = [&](const std::string& id, std::size_t row, std::size_t col) {
        for (std::size_t i = 0; i < r.patches.size(); ++i)
            if (r.patches[i].image_id == id && r.patches[i].row == row && r.patches[i].col == col)
                return int(i) + 1;
        return 0;
    };
    const int moire_rank = rank_of("img06", 128, 128), zipper_rank = rank_of("img13", 128, 0);

    // Exact values of the spectral ratio on one window.
    const RgbImage a = corpus[0].ci.crop(0, 0, 128, 128), g = corpus[0].gt.crop(0, 0, 128, 128);
    const MoireOptions mo;
    const auto rho = moire_rho(a.planes[1].data(), g.planes[1].data(), 128, 128, mo);
    const auto self = moire_rho(g.planes[1].data(), g.planes[1].data(), 128, 128, mo);
    bool out_band_one = true, self_zero = true;
    std::size_t out_count = 0;
    for (std::size_t u = 0; u < 128; ++u)
        for (std::size_t v = 0; v < 128; ++v) {
            const std::size_t i = u * 128 + v;
            if (moire_in_band(u, v, 128, 128, mo.cutoff)) {
                self_zero = self_zero && self[i] == 0.0;
            } else {
                ++out_count;
                out_band_one = out_band_one && rho[i] == 1.0 && self[i] == 1.0;
            }
        }
    const bool ok = moire_rank >= 1 && zipper_rank >= 1 && out_band_one && self_zero
                    && out_count > 0;
    return {ok, format("%zu windows; Moire patch rank %d, zipper patch rank %d; out-of-band rho "
                       "== 1 at %zu bins: %s; in-band self rho == 0: %s",
                       r.candidates, moire_rank, zipper_rank, out_count,
                       out_band_one ? "yes" : "no", self_zero ? "yes" : "no")};
}

// --- 8 ------------------------------------------------------------------------

int cli(const std::vector<std::string>& args)
{
    std::vector<std::string> full{"quadlab"};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = quadlab::cli::run(full, out, err);
    if (code != 0)
        throw std::runtime_error(args.front() + " failed: " + err.str());
    return code;
}

// Every regular file under `dir`, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return files;
}

Outcome determinism()
{
    const fs::path base = test::scratch_dir("acceptance_determinism");
    fs::create_directories(base / "corpus");
    fs::create_directories(base / "pairs");
    for (int i = 0; i < 3; ++i) {
        const std::string id = "s" + std::to_string(i);
        const RgbImage img = synth_scene(64, 64, 300 + i);
        write_png(base / "corpus" / (id + ".png"), img);
        write_png(base / "pairs" / (id + ".gt.png"), img);
        write_png(base / "pairs" / (id + ".ci.png"),
                  bilinear_demosaic(mosaic(img, CfaPattern::bayer())));
    }
    write_file_atomic(base / "tiny.cfg", "channels = 4\nwindow = 4\nheads = 1\npatch = 32\n"
                                         "batch = 2\nsteps = 20\n");

    std::vector<std::map<std::string, std::string>> runs;
    for (int run = 0; run < 2; ++run) {
        const fs::path out = base / ("run" + std::to_string(run));
        fs::create_directories(out);
        cli({"simulate", "--input", (base / "corpus" / "s0.png").string(), "--noise-db", "24",
             "--seed", "11", "--out", (out / "s0.pgm").string()});
        cli({"train", "--corpus", (base / "corpus").string(), "--config",
             (base / "tiny.cfg").string(), "--seed", "5", "--out", (out / "model.ckpt").string()});
        cli({"mine", "--pairs", (base / "pairs").string(), "--k", "4", "--patch", "32", "--out",
             (out / "hard.csv").string()});
        runs.push_back(snapshot(out));
    }
    std::size_t differing = 0;
    for (const auto& [name, bytes] : runs[0]) {
        auto it = runs[1].find(name);
        differing += it == runs[1].end() || it->second != bytes;
    }
    const bool ok = runs[0].size() == runs[1].size() && differing == 0 && runs[0].size() >= 5;
    return {ok, format("%zu output files per run (mosaic, sidecar, checkpoint, loss curve, "
                       "manifest, crops), %zu differ",
                       runs[0].size(), differing)};
}

// --- 9 ------------------------------------------------------------------------

Outcome metrics()
{
    std::mt19937_64 rng(9);
    MosaicImage a = test::random_mosaic(64, 64, CfaPattern::bayer(), rng);
    for (auto& v : a.samples)
        v *= 0.9f;
    MosaicImage b = a;
    for (auto& v : b.samples)
        v += 0.1f;
    const double p = psnr(a, b);
    const RgbImage img = test::random_rgb(32, 32, rng);
    const double s = ssim(img, img);
    const double k = kld(a, a);
    return {std::abs(p - 20.0) <= 1e-3 && s == 1.0 && k == 0.0,
            format("psnr(a, a+0.1) = %.6f dB, ssim(a, a) = %.17g, kld(a, a) = %g", p, s, k)};
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::size_t(std::atoi(argv[i])));
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"gradient checks", gradients},
        {"wavelet invertibility", wavelet},
        {"frequency structure", fsm_structure},
        {"CFA periodicity", periodicity},
        {"toy training", toy_training},
        {"noise trend", noise_trend},
        {"hard patch mining", mining},
        {"determinism", determinism},
        {"metric sanity", metrics},
    };
    int failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(i + 1))
            continue;
        ++ran;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
