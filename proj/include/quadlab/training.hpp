// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Loss, optimizer, patch sampling and the toy training loop.

#pragma once

#include <quadlab/model.hpp>
#include <quadlab/raw_sim.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace quadlab {

struct LossWeights {
    double alpha1 = 0.99;  ///< pixel L1 term
    double alpha2 = 0.01;  ///< frequency term
};

struct LossValue {
    double l1 = 0;
    double fft = 0;
    double total = 0;
};

/// alpha1 * mean|p - t| + alpha2 * mean over the real and imaginary parts
/// of the unnormalized 2-D DFT of (p - t), taken per [H, W] plane.
template<typename T>
LossValue loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
               const LossWeights& w = {});
/// Gradient of the total with respect to `pred`.
template<typename T>
BasicTensor<T> loss_backward(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             const LossWeights& w = {});

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment optimizer with bias correction.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(ParamSet<float>& params, const ParamSet<float>& grads);
    std::size_t steps() const { return t_; }
    const ParamSet<float>& first_moment() const { return m_; }
    const ParamSet<float>& second_moment() const { return v_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    ParamSet<float> m_, v_;
};

struct TrainConfig {
    ModelConfig model;
    AdamConfig adam;
    LossWeights loss;
    std::size_t steps = 500;
    std::size_t batch = 4;
    std::size_t patch = 64;
    std::uint64_t seed = 1;
    double noise_db = 24.0;
    double read_sigma = 0.005;
    double shot_scale = 0.0005;
    /// Hard regions are drawn with weight 1 + hard_boost, corpus images 1.
    double hard_boost = 4.0;

    void validate() const;
    /// Applies one key=value setting, including model keys; returns false
    /// for an unknown key.
    bool set(const std::string& key, const std::string& value);
};

/// A region of a corpus image singled out for fine-tuning.
struct HardRegion {
    std::size_t image = 0;
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t size = 0;
};

/// Weighted choice over corpus images and hard regions.
class PatchSampler {
public:
    PatchSampler(std::size_t corpus_size, std::vector<HardRegion> hard, double boost);
    /// Index into [0, corpus_size + hard.size()); values >= corpus_size
    /// denote hard region (index - corpus_size).
    std::size_t draw(std::mt19937_64& rng);
    std::size_t entries() const { return weights_.size(); }
    const std::vector<HardRegion>& hard() const { return hard_; }

private:
    std::vector<HardRegion> hard_;
    std::vector<double> weights_;
    std::discrete_distribution<std::size_t> dist_;
};

/// Network input (noisy Quad mosaic) and target (clean Bayer mosaic) for
/// one RGB crop, each [1, 1, H, W].
struct TrainingPair {
    Tensor input;
    Tensor target;
};
TrainingPair make_pair(const RgbImage& crop, const NoiseParams& noise);

/// Stacks pairs into one [N, 1, H, W] batch.
TrainingPair stack_pairs(const std::vector<TrainingPair>& pairs);

/// One forward/backward/update. Throws NumericError on a non-finite loss.
LossValue train_step(ModelState& state, Adam& opt, const TrainingPair& batch,
                     const LossWeights& w);

struct LossRecord {
    std::size_t step = 0;
    LossValue value;
};

struct FitResult {
    ModelState state;
    std::vector<LossRecord> curve;
};

/// Trains for cfg.steps steps on random crops of `corpus`. When `hard` is
/// nonempty, crops are also drawn from the hard regions. Starts from
/// `initial` when given, otherwise from init_model(cfg.model, cfg.seed).
FitResult fit_toy(const std::vector<RgbImage>& corpus, const TrainConfig& cfg,
                  const std::vector<HardRegion>& hard = {}, const ModelState* initial = nullptr);

/// "step,l1_term,fft_term,total" CSV.
std::string loss_csv(const std::vector<LossRecord>& curve);

}  // namespace quadlab
