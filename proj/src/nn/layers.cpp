// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/nn/layers.hpp>

#include <cmath>
#include <stdexcept>

namespace quadlab::nn {

namespace {

Tensor uniform_tensor(Shape shape, float bound, Rng& rng)
{
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> u(-bound, bound);
    for (auto& v : t.values())
        v = u(rng);
    return t;
}

}  // namespace

// --- plain conv ---------------------------------------------------------------

void init_conv(ParamSet<float>& p, const std::string& key, std::size_t cout, std::size_t cin,
               std::size_t k, Rng& rng)
{
    const float bound = 1.0f / std::sqrt(float(cin * k * k));
    p[key + ".weight"] = uniform_tensor({cout, cin, k, k}, bound, rng);
    p[key + ".bias"] = Tensor({cout});
}

template<typename T>
BasicTensor<T> conv_layer(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x,
                          ConvSpec spec)
{
    return conv2d(x, param(p, key + ".weight"), param(p, key + ".bias"), spec);
}

template<typename T>
BasicTensor<T> conv_layer_backward(const ParamSet<T>& p, const std::string& key,
                                   const BasicTensor<T>& x, ConvSpec spec,
                                   const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    auto g = conv2d_backward(x, param(p, key + ".weight"), true, spec, grad_out);
    accumulate(grads, key + ".weight", g.weight);
    accumulate(grads, key + ".bias", g.bias);
    return std::move(g.input);
}

// --- transposed conv ----------------------------------------------------------

void init_conv_transpose(ParamSet<float>& p, const std::string& key, std::size_t cin,
                         std::size_t cout, std::size_t k, Rng& rng)
{
    const float bound = 1.0f / std::sqrt(float(cin * k * k));
    p[key + ".weight"] = uniform_tensor({cin, cout, k, k}, bound, rng);
    p[key + ".bias"] = Tensor({cout});
}

template<typename T>
BasicTensor<T> upsample_layer(const ParamSet<T>& p, const std::string& key,
                              const BasicTensor<T>& x)
{
    return conv_transpose2d(x, param(p, key + ".weight"), param(p, key + ".bias"), 2);
}

template<typename T>
BasicTensor<T> upsample_layer_backward(const ParamSet<T>& p, const std::string& key,
                                       const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                       ParamSet<T>& grads)
{
    auto g = conv_transpose2d_backward(x, param(p, key + ".weight"), true, 2, grad_out);
    accumulate(grads, key + ".weight", g.weight);
    accumulate(grads, key + ".bias", g.bias);
    return std::move(g.input);
}

// --- prelu --------------------------------------------------------------------

void init_prelu(ParamSet<float>& p, const std::string& key, std::size_t channels, float slope)
{
    p[key + ".slope"] = Tensor({channels}, slope);
}

template<typename T>
BasicTensor<T> prelu_layer(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x)
{
    return prelu(x, param(p, key + ".slope"));
}

template<typename T>
BasicTensor<T> prelu_layer_backward(const ParamSet<T>& p, const std::string& key,
                                    const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                    ParamSet<T>& grads)
{
    auto [gx, ga] = prelu_backward(x, param(p, key + ".slope"), grad_out);
    accumulate(grads, key + ".slope", ga);
    return std::move(gx);
}

// --- CFA conv -----------------------------------------------------------------

void init_cfa_conv(ParamSet<float>& p, const std::string& key, const CfaPattern& pattern,
                   std::size_t cout, std::size_t cin, std::size_t k, Rng& rng)
{
    const float bound = 1.0f / std::sqrt(float(cin * k * k));
    p[key + ".banks"] = uniform_tensor({std::size_t(pattern.period_rows()),
                                        std::size_t(pattern.period_cols()), cout, cin, k, k},
                                       bound, rng);
    p[key + ".bias"] = Tensor({cout});
}

template<typename T>
BasicTensor<T> cfa_conv_layer(const ParamSet<T>& p, const std::string& key,
                              const CfaPattern& pattern, const BasicTensor<T>& x)
{
    return cfa_conv(x, pattern, param(p, key + ".banks"), param(p, key + ".bias"));
}

template<typename T>
BasicTensor<T> cfa_conv_layer_backward(const ParamSet<T>& p, const std::string& key,
                                       const CfaPattern& pattern, const BasicTensor<T>& x,
                                       const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    auto g = cfa_conv_backward(x, pattern, param(p, key + ".banks"), true, Padding::zero,
                               grad_out);
    accumulate(grads, key + ".banks", g.weight);
    accumulate(grads, key + ".bias", g.bias);
    return std::move(g.input);
}

// --- residual conv --------------------------------------------------------------

void init_residual_conv(ParamSet<float>& p, const std::string& key, std::size_t channels,
                        Rng& rng)
{
    init_conv(p, key + ".conv1", channels, channels, 3, rng);
    init_prelu(p, key + ".act", channels);
    init_conv(p, key + ".conv2", channels, channels, 3, rng);
}

template<typename T>
BasicTensor<T> residual_conv(const ParamSet<T>& p, const std::string& key,
                             const BasicTensor<T>& x, Padding mode)
{
    const ConvSpec spec = same(3, mode);
    auto h1 = conv_layer(p, key + ".conv1", x, spec);
    auto a1 = prelu_layer(p, key + ".act", h1);
    return x + conv_layer(p, key + ".conv2", a1, spec);
}

template<typename T>
BasicTensor<T> residual_conv_backward(const ParamSet<T>& p, const std::string& key,
                                      const BasicTensor<T>& x, Padding mode,
                                      const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    const ConvSpec spec = same(3, mode);
    auto h1 = conv_layer(p, key + ".conv1", x, spec);
    auto a1 = prelu_layer(p, key + ".act", h1);
    auto ga1 = conv_layer_backward(p, key + ".conv2", a1, spec, grad_out, grads);
    auto gh1 = prelu_layer_backward(p, key + ".act", h1, ga1, grads);
    auto gx = conv_layer_backward(p, key + ".conv1", x, spec, gh1, grads);
    gx += grad_out;
    return gx;
}

// --- residual group -----------------------------------------------------------

void init_residual_group(ParamSet<float>& p, const std::string& key, std::size_t channels,
                         Rng& rng)
{
    init_conv(p, key + ".conv1", channels, channels, 3, rng);
    init_prelu(p, key + ".act1", channels);
    init_conv(p, key + ".conv2", channels, channels, 3, rng);
    init_prelu(p, key + ".act2", channels);
}

template<typename T>
BasicTensor<T> residual_group(const ParamSet<T>& p, const std::string& key,
                              const BasicTensor<T>& x)
{
    const ConvSpec spec = same(3);
    auto h1 = conv_layer(p, key + ".conv1", x, spec);
    auto a1 = prelu_layer(p, key + ".act1", h1);
    auto h2 = conv_layer(p, key + ".conv2", a1, spec);
    return x + prelu_layer(p, key + ".act2", h2);
}

template<typename T>
BasicTensor<T> residual_group_backward(const ParamSet<T>& p, const std::string& key,
                                       const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                       ParamSet<T>& grads)
{
    const ConvSpec spec = same(3);
    auto h1 = conv_layer(p, key + ".conv1", x, spec);
    auto a1 = prelu_layer(p, key + ".act1", h1);
    auto h2 = conv_layer(p, key + ".conv2", a1, spec);
    auto gh2 = prelu_layer_backward(p, key + ".act2", h2, grad_out, grads);
    auto ga1 = conv_layer_backward(p, key + ".conv2", a1, spec, gh2, grads);
    auto gh1 = prelu_layer_backward(p, key + ".act1", h1, ga1, grads);
    auto gx = conv_layer_backward(p, key + ".conv1", x, spec, gh1, grads);
    gx += grad_out;
    return gx;
}

// --- CFA attention ------------------------------------------------------------

void init_cfa_attention(ParamSet<float>& p, const std::string& key, std::size_t channels,
                        Rng& rng)
{
    init_residual_conv(p, key + ".rconv1", channels, rng);
    init_residual_conv(p, key + ".rconv2", channels, rng);
    const float bound = 1.0f / std::sqrt(float(channels));
    p[key + ".fc.weight"] = uniform_tensor({channels, channels}, bound, rng);
    p[key + ".fc.bias"] = Tensor({channels});
    // Zero logits give a unit gate, so a fresh block starts as the identity.
    p[key + ".conv.weight"] = Tensor({channels, channels, 3, 3});
    p[key + ".conv.bias"] = Tensor({channels});
}

namespace {

template<typename T>
struct AttentionTrace {
    BasicTensor<T> pooled, r1, r2, fc_in, fc_out, z, scale;
};

template<typename T>
AttentionTrace<T> attention_trace(const ParamSet<T>& p, const std::string& key,
                                  const CfaPattern& pattern, const BasicTensor<T>& x)
{
    AttentionTrace<T> t;
    t.pooled = cfa_pool(x, pattern);
    t.r1 = residual_conv(p, key + ".rconv1", t.pooled, Padding::periodic);
    t.r2 = residual_conv(p, key + ".rconv2", t.r1, Padding::periodic);
    t.fc_in = sites_to_rows(t.r2);
    t.fc_out = fully_connected(t.fc_in, param(p, key + ".fc.weight"), param(p, key + ".fc.bias"));
    auto refined = rows_to_sites(t.fc_out, t.r2.shape());
    t.z = conv_layer(p, key + ".conv", refined, same(3, Padding::periodic));
    t.scale = gate(t.z);
    // Keep the refined map as the conv input for the backward pass.
    t.fc_out = std::move(refined);
    return t;
}

}  // namespace

template<typename T>
BasicTensor<T> cfa_attention(const ParamSet<T>& p, const std::string& key,
                             const CfaPattern& pattern, const BasicTensor<T>& x)
{
    auto t = attention_trace(p, key, pattern, x);
    return periodic_scale(x, t.scale);
}

template<typename T>
BasicTensor<T> cfa_attention_backward(const ParamSet<T>& p, const std::string& key,
                                      const CfaPattern& pattern, const BasicTensor<T>& x,
                                      const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    auto t = attention_trace(p, key, pattern, x);
    auto [gx, gscale] = periodic_scale_backward(x, t.scale, grad_out);
    auto gz = gate_backward(t.z, gscale);
    auto grefined = conv_layer_backward(p, key + ".conv", t.fc_out, same(3, Padding::periodic),
                                        gz, grads);
    auto fc = fully_connected_backward(t.fc_in, param(p, key + ".fc.weight"),
                                       sites_to_rows(grefined));
    accumulate(grads, key + ".fc.weight", fc.weight);
    accumulate(grads, key + ".fc.bias", fc.bias);
    auto gr2 = rows_to_sites(fc.input, t.r2.shape());
    auto gr1 = residual_conv_backward(p, key + ".rconv2", t.r1, Padding::periodic, gr2, grads);
    auto gpool = residual_conv_backward(p, key + ".rconv1", t.pooled, Padding::periodic, gr1,
                                        grads);
    gx += cfa_pool_backward(gpool, pattern, x.dim(2), x.dim(3));
    return std::move(gx);
}

// --- swin-conv block ----------------------------------------------------------

void init_sc_block(ParamSet<float>& p, const std::string& key, std::size_t channels, Rng& rng)
{
    if (channels % 2)
        throw std::invalid_argument("sc_block: channel count must be even");
    init_window_attention(p, key + ".attn", channels / 2, rng);
    init_residual_conv(p, key + ".rconv", channels / 2, rng);
    init_conv(p, key + ".fuse", channels, channels, 1, rng);
}

template<typename T>
BasicTensor<T> sc_block(const ParamSet<T>& p, const std::string& key, const BasicTensor<T>& x,
                        std::size_t window, std::size_t heads)
{
    if (x.rank() != 4 || x.dim(1) % 2)
        throw std::invalid_argument("sc_block: channel count must be even");
    const std::size_t half = x.dim(1) / 2;
    auto a = window_attention(p, key + ".attn", slice_channels(x, 0, half), window, heads);
    auto r = residual_conv(p, key + ".rconv", slice_channels(x, half, half));
    return x + conv_layer(p, key + ".fuse", concat_channels(a, r), same(1));
}

template<typename T>
BasicTensor<T> sc_block_backward(const ParamSet<T>& p, const std::string& key,
                                 const BasicTensor<T>& x, std::size_t window, std::size_t heads,
                                 const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    if (x.rank() != 4 || x.dim(1) % 2)
        throw std::invalid_argument("sc_block: channel count must be even");
    const std::size_t half = x.dim(1) / 2;
    auto xa = slice_channels(x, 0, half);
    auto xr = slice_channels(x, half, half);
    auto a = window_attention(p, key + ".attn", xa, window, heads);
    auto r = residual_conv(p, key + ".rconv", xr);
    auto gcat = conv_layer_backward(p, key + ".fuse", concat_channels(a, r), same(1), grad_out,
                                    grads);
    auto ga = window_attention_backward(p, key + ".attn", xa, window, heads,
                                        slice_channels(gcat, 0, half), grads);
    auto gr = residual_conv_backward(p, key + ".rconv", xr, Padding::zero,
                                     slice_channels(gcat, half, half), grads);
    auto gx = concat_channels(ga, gr);
    gx += grad_out;
    return gx;
}

#define QUADLAB_INSTANTIATE(T)                                                                \
    template BasicTensor<T> conv_layer(const ParamSet<T>&, const std::string&,                \
                                       const BasicTensor<T>&, ConvSpec);                      \
    template BasicTensor<T> conv_layer_backward(const ParamSet<T>&, const std::string&,       \
                                                const BasicTensor<T>&, ConvSpec,              \
                                                const BasicTensor<T>&, ParamSet<T>&);         \
    template BasicTensor<T> upsample_layer(const ParamSet<T>&, const std::string&,            \
                                           const BasicTensor<T>&);                            \
    template BasicTensor<T> upsample_layer_backward(const ParamSet<T>&, const std::string&,   \
                                                    const BasicTensor<T>&,                    \
                                                    const BasicTensor<T>&, ParamSet<T>&);     \
    template BasicTensor<T> prelu_layer(const ParamSet<T>&, const std::string&,               \
                                        const BasicTensor<T>&);                               \
    template BasicTensor<T> prelu_layer_backward(const ParamSet<T>&, const std::string&,      \
                                                 const BasicTensor<T>&,                       \
                                                 const BasicTensor<T>&, ParamSet<T>&);        \
    template BasicTensor<T> cfa_conv_layer(const ParamSet<T>&, const std::string&,            \
                                           const CfaPattern&, const BasicTensor<T>&);         \
    template BasicTensor<T> cfa_conv_layer_backward(const ParamSet<T>&, const std::string&,   \
                                                    const CfaPattern&, const BasicTensor<T>&, \
                                                    const BasicTensor<T>&, ParamSet<T>&);     \
    template BasicTensor<T> residual_conv(const ParamSet<T>&, const std::string&,             \
                                          const BasicTensor<T>&, Padding);                    \
    template BasicTensor<T> residual_conv_backward(const ParamSet<T>&, const std::string&,    \
                                                   const BasicTensor<T>&, Padding,            \
                                                   const BasicTensor<T>&, ParamSet<T>&);      \
    template BasicTensor<T> residual_group(const ParamSet<T>&, const std::string&,            \
                                           const BasicTensor<T>&);                            \
    template BasicTensor<T> residual_group_backward(const ParamSet<T>&, const std::string&,   \
                                                    const BasicTensor<T>&,                    \
                                                    const BasicTensor<T>&, ParamSet<T>&);     \
    template BasicTensor<T> cfa_attention(const ParamSet<T>&, const std::string&,             \
                                          const CfaPattern&, const BasicTensor<T>&);          \
    template BasicTensor<T> cfa_attention_backward(const ParamSet<T>&, const std::string&,    \
                                                   const CfaPattern&, const BasicTensor<T>&,  \
                                                   const BasicTensor<T>&, ParamSet<T>&);      \
    template BasicTensor<T> sc_block(const ParamSet<T>&, const std::string&,                  \
                                     const BasicTensor<T>&, std::size_t, std::size_t);        \
    template BasicTensor<T> sc_block_backward(const ParamSet<T>&, const std::string&,         \
                                              const BasicTensor<T>&, std::size_t,             \
                                              std::size_t, const BasicTensor<T>&,             \
                                              ParamSet<T>&);

QUADLAB_INSTANTIATE(float)
QUADLAB_INSTANTIATE(double)

#undef QUADLAB_INSTANTIATE

}  // namespace quadlab::nn
