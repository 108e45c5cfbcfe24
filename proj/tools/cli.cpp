// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <quadlab/cfa.hpp>
#include <quadlab/config.hpp>
#include <quadlab/error.hpp>
#include <quadlab/io.hpp>
#include <quadlab/metrics.hpp>
#include <quadlab/mining.hpp>
#include <quadlab/model.hpp>
#include <quadlab/raw_sim.hpp>
#include <quadlab/training.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace quadlab::cli {

namespace fs = std::filesystem;

namespace {

/// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t derive_seed(std::uint64_t seed, const std::string& id)
{
    return fnv1a64(std::to_string(seed) + ":" + id);
}

// Sorted regular files in `dir` whose names end with `suffix`.
std::vector<fs::path> list_files(const fs::path& dir, const std::string& suffix)
{
    if (!fs::is_directory(dir))
        throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > suffix.size()
            && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string strip_suffix(const fs::path& p, const std::string& suffix)
{
    const std::string name = p.filename().string();
    return name.substr(0, name.size() - suffix.size());
}

std::string fmt(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(9) << v;
    return s.str();
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
    std::string input, out, pattern = "quad";
    double noise_db = 0, read_sigma = 0.005, shot_scale = 0.0005;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    CfaPattern pattern = CfaPattern::bayer();
    try {
        pattern = CfaPattern::parse(a.pattern);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const RgbImage rgb = read_png(a.input);
    if (rgb.height % std::size_t(pattern.period_rows()) || rgb.width % std::size_t(pattern.period_cols()))
        throw DataError(a.input + ": size " + std::to_string(rgb.height) + "x"
                        + std::to_string(rgb.width) + " is not a multiple of the pattern period");
    NoiseParams np;
    np.gain_db = a.noise_db;
    np.read_sigma_base = a.read_sigma;
    np.shot_scale_base = a.shot_scale;
    np.seed = derive_seed(a.seed, fs::path(a.input).stem().string());
    if (!(np.read_sigma_base >= 0) || !(np.shot_scale_base >= 0))
        throw UsageError("noise parameters must be non-negative");
    write_mosaic(a.out, add_noise(mosaic(rgb, pattern), np));
    out << "wrote " << a.out << " (" << rgb.height << "x" << rgb.width << ", "
        << pattern.name() << ", " << a.noise_db << " dB)\n";
    return kOk;
}

// --- remosaic -----------------------------------------------------------------

struct RemosaicArgs {
    std::string input, out, method, checkpoint;
};

int cmd_remosaic(const RemosaicArgs& a, std::ostream& out)
{
    const MosaicImage quad = read_mosaic(a.input);
    if (!(quad.pattern == CfaPattern::quad()))
        throw DataError(a.input + ": expected a Quad Bayer mosaic, got '"
                        + quad.pattern.label_string() + "'");
    MosaicImage result;
    if (a.method == "swap") {
        result = quad_to_bayer_swap(quad);
    } else if (a.method == "bin2x2") {
        result = bin2x2(quad);
    } else {
        if (a.checkpoint.empty())
            throw UsageError("--method djrd requires --checkpoint");
        const ModelState state = load_state(a.checkpoint);
        const std::size_t m = state.config.size_multiple();
        if (quad.height % m || quad.width % m)
            throw DataError(a.input + ": djrd needs dimensions that are multiples of "
                            + std::to_string(m));
        result = forward(quad, state);
    }
    write_mosaic(a.out, result);
    out << "wrote " << a.out << " (" << result.height << "x" << result.width << ", "
        << a.method << ")\n";
    return kOk;
}

// --- train --------------------------------------------------------------------

struct TrainArgs {
    std::string corpus, config, hard_manifest, init, out, loss_csv;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    bool steps_set = false, seed_set = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out)
{
    TrainConfig cfg;
    if (!a.config.empty())
        cfg = load_train_config(a.config);
    if (a.steps_set)
        cfg.steps = a.steps;
    if (a.seed_set)
        cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(a.config + ": " + e.what());
    }

    std::vector<RgbImage> corpus;
    std::map<std::string, std::size_t> index;
    for (const auto& f : list_files(a.corpus, ".png")) {
        index[f.stem().string()] = corpus.size();
        corpus.push_back(read_png(f));
    }
    if (corpus.empty())
        throw DataError("no PNG images in " + a.corpus);

    std::vector<HardRegion> hard;
    if (!a.hard_manifest.empty())
        for (const auto& p : parse_manifest(read_file(a.hard_manifest))) {
            auto it = index.find(p.image_id);
            if (it == index.end())
                throw DataError(a.hard_manifest + ": image '" + p.image_id
                                + "' is not in the corpus");
            hard.push_back({it->second, p.row, p.col, p.size});
        }

    ModelState initial;
    if (!a.init.empty()) {
        initial = load_state(a.init);
        if (initial.config.canonical() != cfg.model.canonical())
            throw DataError(a.init + ": checkpoint architecture differs from the config");
    }
    FitResult fit;
    try {
        fit = fit_toy(corpus, cfg, hard, a.init.empty() ? nullptr : &initial);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    save_state(fit.state, a.out);
    const std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
    write_file_atomic(csv_path, loss_csv(fit.curve));
    out << "trained " << cfg.steps << " steps on " << corpus.size() << " images";
    if (!hard.empty())
        out << " + " << hard.size() << " hard regions";
    if (!fit.curve.empty())
        out << "; final loss " << fmt(fit.curve.back().value.total);
    out << "\nwrote " << a.out << " and " << csv_path << "\n";
    return kOk;
}

// --- mine ---------------------------------------------------------------------

struct MineArgs {
    std::string pairs, out, crops;
    std::size_t k = 2000, patch = 128, stride = 0;
    double eta = 1e-6;
};

int cmd_mine(const MineArgs& a, std::ostream& out)
{
    std::vector<ImagePair> corpus;
    for (const auto& f : list_files(a.pairs, ".ci.png")) {
        const std::string id = strip_suffix(f, ".ci.png");
        const fs::path gt = fs::path(a.pairs) / (id + ".gt.png");
        if (!fs::exists(gt))
            throw DataError("missing reference " + gt.string());
        ImagePair p{id, read_png(f), read_png(gt)};
        if (p.ci.height != p.gt.height || p.ci.width != p.gt.width)
            throw DataError(id + ": reconstruction and reference differ in size");
        corpus.push_back(std::move(p));
    }
    if (corpus.empty())
        throw DataError("no *.ci.png files in " + a.pairs);
    if (a.k == 0 || a.patch == 0)
        throw UsageError("--k and --patch must be positive");
    MoireOptions mo;
    mo.eta = a.eta;
    const std::size_t stride = a.stride ? a.stride : std::max<std::size_t>(a.patch / 2, 1);
    const MiningResult r = select_hard_patches(corpus, a.k, a.patch, stride, mo);

    const fs::path crops = a.crops.empty() ? fs::path(a.out).parent_path() / "crops"
                                           : fs::path(a.crops);
    fs::create_directories(crops);
    std::map<std::string, const ImagePair*> by_id;
    for (const auto& p : corpus)
        by_id[p.id] = &p;
    for (const auto& s : r.patches) {
        const ImagePair& p = *by_id.at(s.image_id);
        const std::string stem = s.image_id + "_" + std::to_string(s.row) + "_"
                                 + std::to_string(s.col);
        const RgbImage gt = p.gt.crop(s.row, s.col, s.size, s.size);
        write_png(crops / (stem + ".ci.png"), p.ci.crop(s.row, s.col, s.size, s.size));
        write_png(crops / (stem + ".gt.png"), gt);
        if (s.size % 4 == 0)
            write_mosaic(crops / (stem + ".quad.pgm"), mosaic(gt, CfaPattern::quad()));
    }
    write_file_atomic(a.out, manifest_csv(r.patches));
    out << "scored " << r.candidates << " windows, kept " << r.patches.size();
    if (r.short_of_k)
        out << " (fewer than k=" << a.k << " available)";
    out << "\nwrote " << a.out << "\n";
    return kOk;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
    std::string pred, gt, domain = "bayer", out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out)
{
    const auto preds = list_files(a.pred, ".pgm");
    const auto gts = list_files(a.gt, ".pgm");
    if (preds.size() != gts.size())
        throw DataError("prediction and reference counts differ (" + std::to_string(preds.size())
                        + " vs " + std::to_string(gts.size()) + ")");
    if (preds.empty())
        throw DataError("no PGM files in " + a.pred);

    std::ostringstream csv;
    csv << "image_id,domain,psnr,ssim,kld\n";
    double sum_psnr = 0, sum_second = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].filename() != gts[i].filename())
            throw DataError("no reference for " + preds[i].filename().string());
        const MosaicImage p = read_mosaic(preds[i]);
        const MosaicImage g = read_mosaic(gts[i]);
        if (p.height != g.height || p.width != g.width || !(p.pattern == g.pattern))
            throw DataError(preds[i].filename().string() + ": shape or pattern differs from "
                            "the reference");
        const std::string id = preds[i].stem().string();
        if (a.domain == "bayer") {
            const double ps = psnr(p, g), kl = kld(p, g);
            sum_psnr += ps;
            sum_second += kl;
            csv << id << ",bayer," << fmt(ps) << ",," << fmt(kl) << "\n";
        } else {
            if (!(g.pattern == CfaPattern::bayer()))
                throw DataError(id + ": srgb evaluation needs Bayer mosaics");
            const RgbImage rp = bilinear_demosaic(p), rg = bilinear_demosaic(g);
            const double peak = double(g.white_level) - g.black_level;
            const double ps = psnr(rp, rg, peak);
            SsimOptions so;
            so.peak = peak;
            const double ss = ssim(rp, rg, so);
            sum_psnr += ps;
            sum_second += ss;
            csv << id << ",srgb," << fmt(ps) << "," << fmt(ss) << ",\n";
        }
    }
    const double n = double(preds.size());
    if (a.domain == "bayer")
        csv << "mean,bayer," << fmt(sum_psnr / n) << ",," << fmt(sum_second / n) << "\n";
    else
        csv << "mean,srgb," << fmt(sum_psnr / n) << "," << fmt(sum_second / n) << ",\n";
    write_file_atomic(a.out, csv.str());
    out << "evaluated " << preds.size() << " images; wrote " << a.out << "\n";
    return kOk;
}

// --- analyze-fsm --------------------------------------------------------------

struct FsmArgs {
    std::string pattern = "bayer", triple = "1,1,1";
};

std::array<double, 3> parse_triple(const std::string& text)
{
    std::array<double, 3> v{};
    std::istringstream in(text);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(in, cell, ',')) {
        if (n == 3)
            throw UsageError("--triple expects three comma-separated numbers");
        std::size_t used = 0;
        try {
            v[n] = std::stod(cell, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != cell.size() || !std::isfinite(v[n]))
            throw UsageError("--triple: bad number '" + cell + "'");
        ++n;
    }
    if (n != 3)
        throw UsageError("--triple expects three comma-separated numbers");
    return v;
}

int cmd_analyze_fsm(const FsmArgs& a, std::ostream& out)
{
    const auto rgb = parse_triple(a.triple);
    CfaPattern pattern = CfaPattern::bayer();
    try {
        pattern = CfaPattern::parse(a.pattern);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const FrequencyStructureMatrix m = fsm(pattern, rgb);
    out << "pattern " << pattern.name() << " (" << pattern.label_string() << "), "
        << m.rows << "x" << m.cols << ", R,G,B = " << rgb[0] << "," << rgb[1] << "," << rgb[2]
        << "\n\nsymbolic:\n";
    std::size_t zeros = 0;
    for (int u = 0; u < m.rows; ++u) {
        for (int v = 0; v < m.cols; ++v) {
            zeros += m.structural_zero(u, v);
            out << std::setw(22) << m.symbolic(u, v);
        }
        out << "\n";
    }
    out << "\nnumeric:\n" << std::fixed << std::setprecision(4);
    for (int u = 0; u < m.rows; ++u) {
        for (int v = 0; v < m.cols; ++v) {
            const auto z = m.at(u, v).value;
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(4) << z.real();
            if (std::abs(z.imag()) > 1e-12)
                cell << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
            out << std::setw(18) << cell.str();
        }
        out << "\n";
    }
    out << std::defaultfloat << "\nstructural zeros: " << zeros << "\n";
    for (int u = 0; u < m.rows; ++u) {
        bool all = true;
        for (int v = 0; v < m.cols; ++v)
            all = all && m.structural_zero(u, v);
        if (all)
            out << "zero row: " << u << "\n";
    }
    for (int v = 0; v < m.cols; ++v) {
        bool all = true;
        for (int u = 0; u < m.rows; ++u)
            all = all && m.structural_zero(u, v);
        if (all)
            out << "zero column: " << v << "\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quad Bayer ISP lab: simulate, remosaic, train, mine, evaluate, analyze-fsm"};
    app.name(args.empty() ? "quadlab" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Mosaic an RGB PNG and add sensor noise");
    s->add_option("--input", sim.input, "RGB PNG")->required();
    s->add_option("--pattern", sim.pattern, "bayer, quad or a label string")->capture_default_str();
    s->add_option("--noise-db", sim.noise_db, "Analog gain in dB (0, 24, 42)")->capture_default_str();
    s->add_option("--read-sigma", sim.read_sigma, "Read-noise sigma at 0 dB")->capture_default_str();
    s->add_option("--shot-scale", sim.shot_scale, "Shot-noise variance per unit signal at 0 dB")->capture_default_str();
    s->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
    s->add_option("--out", sim.out, "Output PGM (a .cfa sidecar is written next to it)")
        ->required();

    RemosaicArgs rem;
    auto* r = app.add_subcommand("remosaic", "Convert a Quad Bayer PGM to Bayer");
    r->add_option("--input", rem.input, "Quad Bayer PGM")->required();
    r->add_option("--method", rem.method, "djrd, swap or bin2x2")
        ->required()
        ->check(CLI::IsMember({"djrd", "swap", "bin2x2"}));
    r->add_option("--checkpoint", rem.checkpoint, "Model checkpoint (djrd only)");
    r->add_option("--out", rem.out, "Output Bayer PGM")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the network on a directory of RGB PNGs");
    t->add_option("--corpus", tr.corpus, "Directory of RGB PNGs")->required();
    t->add_option("--config", tr.config, "key=value config file");
    auto* steps = t->add_option("--steps", tr.steps, "Override the configured step count");
    auto* train_seed = t->add_option("--seed", tr.seed, "Override the configured seed");
    t->add_option("--hard-manifest", tr.hard_manifest, "Manifest from `mine` to boost");
    t->add_option("--init", tr.init, "Start from this checkpoint (fine-tuning)");
    t->add_option("--loss-csv", tr.loss_csv, "Loss curve path (default <out>.loss.csv)");
    t->add_option("--out", tr.out, "Output checkpoint")->required();

    MineArgs mi;
    auto* m = app.add_subcommand("mine", "Select hard patches from reconstruction pairs");
    m->add_option("--pairs", mi.pairs, "Directory of <id>.ci.png / <id>.gt.png pairs")
        ->required();
    m->add_option("--k", mi.k, "Number of patches")->capture_default_str();
    m->add_option("--patch", mi.patch, "Patch size")->capture_default_str();
    m->add_option("--stride", mi.stride, "Window stride (default patch/2)");
    m->add_option("--eta", mi.eta, "Spectral floor")->capture_default_str();
    m->add_option("--crops", mi.crops, "Crop directory (default <out dir>/crops)");
    m->add_option("--out", mi.out, "Manifest CSV")->required();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Score predicted mosaics against references");
    e->add_option("--pred", ev.pred, "Directory of predicted PGMs")->required();
    e->add_option("--gt", ev.gt, "Directory of reference PGMs")->required();
    e->add_option("--domain", ev.domain, "bayer or srgb")
        ->capture_default_str()
        ->check(CLI::IsMember({"bayer", "srgb"}));
    e->add_option("--out", ev.out, "Report CSV")->required();

    FsmArgs fa;
    auto* f = app.add_subcommand("analyze-fsm", "Print the frequency structure matrix");
    f->add_option("--pattern", fa.pattern, "bayer, quad or a label string")->capture_default_str();
    f->add_option("--triple", fa.triple, "R,G,B values for the numeric matrix")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    if (argv.empty())
        argv.push_back("quadlab");
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*s)
            return cmd_simulate(sim, out);
        if (*r)
            return cmd_remosaic(rem, out);
        if (*t) {
            tr.steps_set = steps->count() > 0;
            tr.seed_set = train_seed->count() > 0;
            return cmd_train(tr, out);
        }
        if (*m)
            return cmd_mine(mi, out);
        if (*e)
            return cmd_evaluate(ev, out);
        return cmd_analyze_fsm(fa, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return kUsage;
    } catch (const NumericError& ex) {
        err << "numeric error: " << ex.what() << "\n";
        return kNumericError;
    } catch (const DataError& ex) {
        err << "data error: " << ex.what() << "\n";
        return kDataError;
    } catch (const std::exception& ex) {
        err << "data error: " << ex.what() << "\n";
        return kDataError;
    }
}

}  // namespace quadlab::cli
