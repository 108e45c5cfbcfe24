// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/training.hpp>

#include <quadlab/error.hpp>
#include <quadlab/fft.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace quadlab {

namespace {

template<typename T>
void require_planes(const BasicTensor<T>& pred, const BasicTensor<T>& target)
{
    pred.require_same_shape(target, "loss");
    if (pred.rank() < 2)
        throw std::invalid_argument("loss: expected at least [H, W]");
}

double sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

template<typename T>
LossValue loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, const LossWeights& w)
{
    require_planes(pred, target);
    const std::size_t H = pred.dim(pred.rank() - 2), W = pred.dim(pred.rank() - 1);
    const std::size_t planes = pred.size() / (H * W);
    LossValue out;
    std::vector<double> diff(H * W);
    double l1 = 0, fft = 0;
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < H * W; ++i) {
            diff[i] = double(pred[p * H * W + i]) - double(target[p * H * W + i]);
            l1 += std::abs(diff[i]);
        }
        const ComplexPlane D = dft2_real(diff.data(), H, W);
        for (const auto& z : D)
            fft += std::abs(z.real()) + std::abs(z.imag());
    }
    out.l1 = l1 / double(pred.size());
    out.fft = fft / double(2 * pred.size());
    out.total = w.alpha1 * out.l1 + w.alpha2 * out.fft;
    return out;
}

template<typename T>
BasicTensor<T> loss_backward(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             const LossWeights& w)
{
    require_planes(pred, target);
    const std::size_t H = pred.dim(pred.rank() - 2), W = pred.dim(pred.rank() - 1);
    const std::size_t planes = pred.size() / (H * W);
    const double c1 = w.alpha1 / double(pred.size());
    const double c2 = w.alpha2 / double(2 * pred.size());
    BasicTensor<T> grad(pred.shape());
    std::vector<double> diff(H * W);
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < H * W; ++i)
            diff[i] = double(pred[p * H * W + i]) - double(target[p * H * W + i]);
        // d/dd_x sum_k |Re D_k| + |Im D_k| = Re(sum_k (sgn Re D_k + i sgn Im D_k) e^{+i w_k x})
        ComplexPlane S = dft2_real(diff.data(), H, W);
        for (auto& z : S)
            z = {sign(z.real()), sign(z.imag())};
        dft2(S, H, W, true);
        for (std::size_t i = 0; i < H * W; ++i)
            grad[p * H * W + i] = T(c1 * sign(diff[i]) + c2 * S[i].real());
    }
    return grad;
}

template LossValue loss(const Tensor&, const Tensor&, const LossWeights&);
template LossValue loss(const Tensor64&, const Tensor64&, const LossWeights&);
template Tensor loss_backward(const Tensor&, const Tensor&, const LossWeights&);
template Tensor64 loss_backward(const Tensor64&, const Tensor64&, const LossWeights&);

// --- Adam ---------------------------------------------------------------------

void Adam::step(ParamSet<float>& params, const ParamSet<float>& grads)
{
    ++t_;
    const double bc1 = 1 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1 - std::pow(cfg_.beta2, double(t_));
    for (auto& [key, p] : params) {
        auto git = grads.find(key);
        if (git == grads.end())
            continue;
        const Tensor& g = git->second;
        p.require_same_shape(g, "Adam::step");
        auto [mit, mnew] = m_.try_emplace(key, p.shape());
        auto [vit, vnew] = v_.try_emplace(key, p.shape());
        Tensor& m = mit->second;
        Tensor& v = vit->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = float(cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g[i]);
            v[i] = float(cfg_.beta2 * v[i] + (1 - cfg_.beta2) * double(g[i]) * g[i]);
            const double mhat = m[i] / bc1, vhat = v[i] / bc2;
            p[i] = float(p[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

// --- config -------------------------------------------------------------------

void TrainConfig::validate() const
{
    model.validate();
    if (!(adam.lr > 0))
        throw std::invalid_argument("train config: lr must be > 0");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1))
        throw std::invalid_argument("train config: betas must lie in [0, 1)");
    if (!(adam.eps > 0))
        throw std::invalid_argument("train config: eps must be > 0");
    if (!(loss.alpha1 >= 0) || !(loss.alpha2 >= 0))
        throw std::invalid_argument("train config: loss weights must be >= 0");
    if (batch == 0)
        throw std::invalid_argument("train config: batch must be >= 1");
    if (patch == 0 || patch % model.size_multiple())
        throw std::invalid_argument("train config: patch must be a multiple of "
                                    + std::to_string(model.size_multiple()));
    if (!(hard_boost >= 0))
        throw std::invalid_argument("train config: hard_boost must be >= 0");
    if (!(read_sigma >= 0) || !(shot_scale >= 0))
        throw std::invalid_argument("train config: noise parameters must be >= 0");
}

bool TrainConfig::set(const std::string& key, const std::string& value)
{
    auto real = [&](double& field) {
        std::size_t used = 0;
        try {
            field = std::stod(value, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != value.size())
            throw std::invalid_argument("bad value '" + value + "' for '" + key + "'");
    };
    auto integer = [&](auto& field) {
        using F = std::remove_reference_t<decltype(field)>;
        F v{};
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw std::invalid_argument("bad value '" + value + "' for '" + key + "'");
        field = v;
    };
    if (key == "lr") real(adam.lr);
    else if (key == "beta1") real(adam.beta1);
    else if (key == "beta2") real(adam.beta2);
    else if (key == "eps") real(adam.eps);
    else if (key == "alpha1") real(loss.alpha1);
    else if (key == "alpha2") real(loss.alpha2);
    else if (key == "steps") integer(steps);
    else if (key == "batch") integer(batch);
    else if (key == "patch") integer(patch);
    else if (key == "seed") integer(seed);
    else if (key == "noise_db") real(noise_db);
    else if (key == "read_sigma") real(read_sigma);
    else if (key == "shot_scale") real(shot_scale);
    else if (key == "hard_boost") real(hard_boost);
    else return model.set(key, value);
    return true;
}

// --- sampling -------------------------------------------------------------------

PatchSampler::PatchSampler(std::size_t corpus_size, std::vector<HardRegion> hard, double boost)
    : hard_(std::move(hard))
{
    if (corpus_size == 0 && hard_.empty())
        throw std::invalid_argument("PatchSampler: nothing to sample");
    if (!(boost >= 0))
        throw std::invalid_argument("PatchSampler: boost must be >= 0");
    weights_.assign(corpus_size, 1.0);
    weights_.resize(corpus_size + hard_.size(), 1.0 + boost);
    dist_ = std::discrete_distribution<std::size_t>(weights_.begin(), weights_.end());
}

std::size_t PatchSampler::draw(std::mt19937_64& rng) { return dist_(rng); }

TrainingPair make_pair(const RgbImage& crop, const NoiseParams& noise)
{
    const MosaicImage quad = add_noise(mosaic(crop, CfaPattern::quad()), noise);
    const MosaicImage bayer = mosaic(crop, CfaPattern::bayer());
    return {Tensor({1, 1, crop.height, crop.width}, quad.samples),
            Tensor({1, 1, crop.height, crop.width}, bayer.samples)};
}

TrainingPair stack_pairs(const std::vector<TrainingPair>& pairs)
{
    if (pairs.empty())
        throw std::invalid_argument("stack_pairs: empty batch");
    const Shape& s = pairs.front().input.shape();
    Shape batch = s;
    batch[0] = 0;
    std::vector<float> in, tgt;
    for (const auto& p : pairs) {
        p.input.require_same_shape(pairs.front().input, "stack_pairs");
        p.target.require_same_shape(pairs.front().input, "stack_pairs");
        batch[0] += p.input.dim(0);
        in.insert(in.end(), p.input.values().begin(), p.input.values().end());
        tgt.insert(tgt.end(), p.target.values().begin(), p.target.values().end());
    }
    return {Tensor(batch, std::move(in)), Tensor(batch, std::move(tgt))};
}

LossValue train_step(ModelState& state, Adam& opt, const TrainingPair& batch,
                     const LossWeights& w)
{
    LossValue value;
    ParamSet<float> grads;
    model_forward_backward(
        state.params, state.config, batch.input,
        [&](const Tensor& pred) {
            value = loss(pred, batch.target, w);
            if (!std::isfinite(value.total))
                throw NumericError("train_step: non-finite loss (l1="
                                   + std::to_string(value.l1) + ", fft="
                                   + std::to_string(value.fft) + ") at step "
                                   + std::to_string(opt.steps() + 1));
            return loss_backward(pred, batch.target, w);
        },
        grads);
    for (const auto& [key, g] : grads)
        if (!g.all_finite())
            throw NumericError("train_step: non-finite gradient for '" + key + "'");
    opt.step(state.params, grads);
    return value;
}

FitResult fit_toy(const std::vector<RgbImage>& corpus, const TrainConfig& cfg,
                  const std::vector<HardRegion>& hard, const ModelState* initial)
{
    if (corpus.empty())
        throw std::invalid_argument("fit_toy: empty corpus");
    cfg.validate();
    for (const auto& img : corpus)
        if (img.height < cfg.patch || img.width < cfg.patch)
            throw std::invalid_argument("fit_toy: corpus image smaller than the patch size");
    for (const auto& r : hard)
        if (r.image >= corpus.size() || r.size < cfg.patch
            || r.row + r.size > corpus[r.image].height || r.col + r.size > corpus[r.image].width)
            throw std::invalid_argument("fit_toy: hard region outside its image");

    FitResult out;
    out.state = initial ? *initial : init_model(cfg.model, cfg.seed);
    out.state.config.validate();
    Adam opt(cfg.adam);
    PatchSampler sampler(corpus.size(), hard, cfg.hard_boost);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    NoiseParams noise;
    noise.gain_db = cfg.noise_db;
    noise.read_sigma_base = cfg.read_sigma;
    noise.shot_scale_base = cfg.shot_scale;

    auto pick = [&](std::size_t lo, std::size_t extent) {
        const std::size_t span = extent - cfg.patch;
        return lo + (span ? rng() % (span + 1) : 0);
    };
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        std::vector<TrainingPair> pairs;
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            const std::size_t e = sampler.draw(rng);
            std::size_t img, row, col;
            if (e < corpus.size()) {
                img = e;
                row = pick(0, corpus[e].height);
                col = pick(0, corpus[e].width);
            } else {
                const HardRegion& r = hard[e - corpus.size()];
                img = r.image;
                row = pick(r.row, r.size);
                col = pick(r.col, r.size);
            }
            noise.seed = rng();
            pairs.push_back(make_pair(corpus[img].crop(row, col, cfg.patch, cfg.patch), noise));
        }
        const LossValue v = train_step(out.state, opt, stack_pairs(pairs), cfg.loss);
        out.curve.push_back({step, v});
    }
    return out;
}

std::string loss_csv(const std::vector<LossRecord>& curve)
{
    std::ostringstream s;
    s.precision(9);
    s << "step,l1_term,fft_term,total\n";
    for (const auto& r : curve)
        s << r.step << ',' << r.value.l1 << ',' << r.value.fft << ',' << r.value.total << '\n';
    return s.str();
}

}  // namespace quadlab
