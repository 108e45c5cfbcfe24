// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Central finite-difference verification of hand-written backward passes.
///
/// An op is described by two generic callables:
///   fwd(const ParamSet<T>& args) -> BasicTensor<T>
///   bwd(const ParamSet<T>& args, const BasicTensor<T>& grad_out) -> ParamSet<T>
/// where `args` holds every differentiable input (activations and
/// parameters alike) and `bwd` returns a gradient for each key it covers.
/// The scalar probed is L = sum(fwd(args) * R) for a fixed random R.
/// Differences are always taken in double precision; the analytic gradient
/// is evaluated in float (the production path) and in double (the shadow).

#pragma once

#include <quadlab/tensor.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace quadlab::nn {

struct GradCheckOptions {
    double step = 1e-3;
    double tolerance = 1e-3;         ///< float path
    double shadow_tolerance = 1e-6;  ///< double path
    /// Number of randomly chosen scalar entries to probe; 0 probes all.
    std::size_t probes = 0;
    std::uint64_t seed = 7;
    /// A tensor's error is measured against at least this fraction of the
    /// largest gradient entry over all tensors, so a tensor whose exact
    /// gradient vanishes (say a bias the output is invariant to) is judged
    /// by its rounding noise relative to the op's gradient scale.
    double scale_floor = 1e-3;
    /// Combine central differences at `step` and `step`/2 as
    /// (4 D(h/2) - D(h)) / 3, cancelling the h^2 truncation term.
    bool richardson = true;
};

struct GradCheckReport {
    double max_rel_error = 0;     ///< float analytic vs double differences
    double shadow_rel_error = 0;  ///< double analytic vs double differences
    std::size_t probed = 0;
    bool finite = true;
    bool passed = false;
};

namespace detail {

// max_i |a_i - n_i| / max(max_i |n_i|, floor, 1e-10) over one tensor's probes.
struct RelAccumulator {
    double diff = 0, scale = 0;
    void add(double analytic, double numeric)
    {
        diff = std::max(diff, std::abs(analytic - numeric));
        scale = std::max(scale, std::abs(numeric));
    }
    double value(double floor) const { return diff / std::max({scale, floor, 1e-10}); }
};

}  // namespace detail

template<typename Fwd, typename Bwd>
GradCheckReport grad_check(Fwd&& fwd, Bwd&& bwd, const ParamSet<float>& args,
                           const GradCheckOptions& opts = {})
{
    GradCheckReport report;
    std::mt19937_64 rng(opts.seed);
    const auto args64 = cast_params<double>(args);

    const Tensor64 y = fwd(args64);
    Tensor64 weights(y.shape());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : weights.values())
        v = u(rng);

    const ParamSet<double> g64 = bwd(args64, weights);
    const ParamSet<float> g32 = bwd(args, weights.template cast<float>());

    // Probe list: (key, flat index).
    std::vector<std::pair<std::string, std::size_t>> probes;
    for (const auto& [key, t] : args64)
        if (g64.count(key))
            for (std::size_t i = 0; i < t.size(); ++i)
                probes.emplace_back(key, i);
    if (opts.probes && opts.probes < probes.size()) {
        std::shuffle(probes.begin(), probes.end(), rng);
        probes.resize(opts.probes);
        std::sort(probes.begin(), probes.end());
    }
    report.probed = probes.size();

    std::map<std::string, detail::RelAccumulator> acc32, acc64;
    auto perturbed = args64;
    for (const auto& [key, i] : probes) {
        auto& slot = perturbed.at(key)[i];
        const double orig = slot;
        auto central = [&](double h) {
            slot = orig + h;
            const double lp = dot(fwd(std::as_const(perturbed)), weights);
            slot = orig - h;
            const double lm = dot(fwd(std::as_const(perturbed)), weights);
            slot = orig;
            return (lp - lm) / (2 * h);
        };
        const double coarse = central(opts.step);
        const double numeric =
            opts.richardson ? (4 * central(opts.step / 2) - coarse) / 3 : coarse;
        const double a64 = g64.at(key)[i];
        const auto it32 = g32.find(key);
        const double a32 = it32 == g32.end() ? 0.0 : double(it32->second[i]);
        if (!std::isfinite(numeric) || !std::isfinite(a64) || !std::isfinite(a32))
            report.finite = false;
        acc32[key].add(a32, numeric);
        acc64[key].add(a64, numeric);
    }
    double global = 0;
    for (const auto& [key, a] : acc64)
        global = std::max(global, a.scale);
    const double floor = opts.scale_floor * global;
    for (const auto& [key, a] : acc32)
        report.max_rel_error = std::max(report.max_rel_error, a.value(floor));
    for (const auto& [key, a] : acc64)
        report.shadow_rel_error = std::max(report.shadow_rel_error, a.value(floor));
    report.passed = report.finite && !probes.empty()
                    && report.max_rel_error <= opts.tolerance
                    && report.shadow_rel_error <= opts.shadow_tolerance;
    return report;
}

}  // namespace quadlab::nn
