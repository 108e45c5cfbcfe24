// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/nn/kernels.hpp>

#include <cmath>
#include <stdexcept>

namespace quadlab::nn {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

void require_rank(const Shape& s, std::size_t rank, const char* op)
{
    require(s.size() == rank, std::string(op) + ": expected rank " + std::to_string(rank)
                                  + " tensor, got " + shape_string(s));
}

// Source index of padded coordinate `x` (already offset by -pad) in [0, n),
// or -1 when it falls into zero padding.
long source_index(long x, long n, Padding mode)
{
    if (x >= 0 && x < n)
        return x;
    switch (mode) {
    case Padding::zero: return -1;
    case Padding::replicate: return x < 0 ? 0 : n - 1;
    case Padding::periodic: return ((x % n) + n) % n;
    }
    return -1;
}

// Copies one image [C, H, W] into a padded buffer [C, H+2p, W+2p].
template<typename T>
void pad_image(const T* src, std::size_t C, std::size_t H, std::size_t W, std::size_t pad,
               Padding mode, T* dst)
{
    const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < Hp; ++i) {
            const long si = source_index(long(i) - long(pad), long(H), mode);
            T* row = dst + (c * Hp + i) * Wp;
            for (std::size_t j = 0; j < Wp; ++j) {
                const long sj = source_index(long(j) - long(pad), long(W), mode);
                row[j] = (si < 0 || sj < 0) ? T(0) : src[(c * H + si) * W + sj];
            }
        }
}

// Adjoint of pad_image: folds padded gradients back onto their sources.
template<typename T>
void unpad_accumulate(const T* padded, std::size_t C, std::size_t H, std::size_t W,
                      std::size_t pad, Padding mode, T* dst)
{
    const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < Hp; ++i) {
            const long si = source_index(long(i) - long(pad), long(H), mode);
            if (si < 0)
                continue;
            const T* row = padded + (c * Hp + i) * Wp;
            for (std::size_t j = 0; j < Wp; ++j) {
                const long sj = source_index(long(j) - long(pad), long(W), mode);
                if (sj >= 0)
                    dst[(c * H + si) * W + sj] += row[j];
            }
        }
}

}  // namespace

// --- conv2d -----------------------------------------------------------------

template<typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, ConvSpec spec)
{
    require_rank(x.shape(), 4, "conv2d input");
    require_rank(weight.shape(), 4, "conv2d weight");
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    require(weight.dim(1) == Cin, "conv2d: weight expects " + std::to_string(weight.dim(1))
                                      + " input channels, got " + std::to_string(Cin));
    require(bias.empty() || bias.shape() == Shape{Cout}, "conv2d: bias shape mismatch");
    require(spec.stride >= 1, "conv2d: stride must be positive");
    const std::size_t Hp = H + 2 * spec.pad, Wp = W + 2 * spec.pad;
    require(Hp >= kh && Wp >= kw, "conv2d: kernel larger than padded input");
    const std::size_t s = spec.stride;
    const std::size_t Ho = (Hp - kh) / s + 1, Wo = (Wp - kw) / s + 1;

    BasicTensor<T> y({N, Cout, Ho, Wo});
    std::vector<T> xp(Cin * Hp * Wp);
    for (std::size_t n = 0; n < N; ++n) {
        pad_image(x.data() + n * Cin * H * W, Cin, H, W, spec.pad, spec.mode, xp.data());
        T* yn = y.data() + n * Cout * Ho * Wo;
        for (std::size_t o = 0; o < Cout; ++o) {
            T* yo = yn + o * Ho * Wo;
            const T b = bias.empty() ? T(0) : bias[o];
            std::fill(yo, yo + Ho * Wo, b);
            for (std::size_t c = 0; c < Cin; ++c)
                for (std::size_t p = 0; p < kh; ++p)
                    for (std::size_t q = 0; q < kw; ++q) {
                        const T w = weight[((o * Cin + c) * kh + p) * kw + q];
                        for (std::size_t i = 0; i < Ho; ++i) {
                            const T* in = xp.data() + (c * Hp + i * s + p) * Wp + q;
                            T* out = yo + i * Wo;
                            if (s == 1)
                                for (std::size_t j = 0; j < Wo; ++j)
                                    out[j] += w * in[j];
                            else
                                for (std::size_t j = 0; j < Wo; ++j)
                                    out[j] += w * in[j * s];
                        }
                    }
        }
    }
    return y;
}

template<typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                             bool has_bias, ConvSpec spec, const BasicTensor<T>& grad_out)
{
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const std::size_t Hp = H + 2 * spec.pad, Wp = W + 2 * spec.pad;
    const std::size_t s = spec.stride;
    const std::size_t Ho = (Hp - kh) / s + 1, Wo = (Wp - kw) / s + 1;
    require(grad_out.shape() == Shape{N, Cout, Ho, Wo}, "conv2d_backward: grad shape mismatch");

    ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()), {}};
    if (has_bias)
        g.bias = BasicTensor<T>({Cout});
    std::vector<T> xp(Cin * Hp * Wp), gxp(Cin * Hp * Wp);
    for (std::size_t n = 0; n < N; ++n) {
        pad_image(x.data() + n * Cin * H * W, Cin, H, W, spec.pad, spec.mode, xp.data());
        std::fill(gxp.begin(), gxp.end(), T(0));
        const T* gn = grad_out.data() + n * Cout * Ho * Wo;
        for (std::size_t o = 0; o < Cout; ++o) {
            const T* go = gn + o * Ho * Wo;
            if (has_bias) {
                T acc = 0;
                for (std::size_t k = 0; k < Ho * Wo; ++k)
                    acc += go[k];
                g.bias[o] += acc;
            }
            for (std::size_t c = 0; c < Cin; ++c)
                for (std::size_t p = 0; p < kh; ++p)
                    for (std::size_t q = 0; q < kw; ++q) {
                        const std::size_t widx = ((o * Cin + c) * kh + p) * kw + q;
                        const T w = weight[widx];
                        T acc = 0;
                        for (std::size_t i = 0; i < Ho; ++i) {
                            const std::size_t off = (c * Hp + i * s + p) * Wp + q;
                            const T* in = xp.data() + off;
                            T* gin = gxp.data() + off;
                            const T* gr = go + i * Wo;
                            if (s == 1) {
                                for (std::size_t j = 0; j < Wo; ++j)
                                    acc += gr[j] * in[j];
                                for (std::size_t j = 0; j < Wo; ++j)
                                    gin[j] += w * gr[j];
                            } else {
                                for (std::size_t j = 0; j < Wo; ++j) {
                                    acc += gr[j] * in[j * s];
                                    gin[j * s] += w * gr[j];
                                }
                            }
                        }
                        g.weight[widx] += acc;
                    }
        }
        unpad_accumulate(gxp.data(), Cin, H, W, spec.pad, spec.mode,
                         g.input.data() + n * Cin * H * W);
    }
    return g;
}

// --- transposed conv --------------------------------------------------------

template<typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, std::size_t stride)
{
    require_rank(x.shape(), 4, "conv_transpose2d input");
    require_rank(weight.shape(), 4, "conv_transpose2d weight");
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    require(weight.dim(0) == Cin, "conv_transpose2d: channel mismatch");
    const std::size_t Cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    require(bias.empty() || bias.shape() == Shape{Cout}, "conv_transpose2d: bias shape mismatch");
    const std::size_t Ho = (H - 1) * stride + kh, Wo = (W - 1) * stride + kw;

    BasicTensor<T> y({N, Cout, Ho, Wo});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < Cout; ++o) {
            T* yo = &y.at(n, o, 0, 0);
            if (!bias.empty())
                std::fill(yo, yo + Ho * Wo, bias[o]);
            for (std::size_t c = 0; c < Cin; ++c) {
                const T* xc = &x.at(n, c, 0, 0);
                for (std::size_t p = 0; p < kh; ++p)
                    for (std::size_t q = 0; q < kw; ++q) {
                        const T w = weight[((c * Cout + o) * kh + p) * kw + q];
                        for (std::size_t i = 0; i < H; ++i)
                            for (std::size_t j = 0; j < W; ++j)
                                yo[(i * stride + p) * Wo + j * stride + q] += w * xc[i * W + j];
                    }
            }
        }
    return y;
}

template<typename T>
ConvGrads<T> conv_transpose2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                       bool has_bias, std::size_t stride,
                                       const BasicTensor<T>& grad_out)
{
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    const std::size_t Ho = (H - 1) * stride + kh, Wo = (W - 1) * stride + kw;
    require(grad_out.shape() == Shape{N, Cout, Ho, Wo},
            "conv_transpose2d_backward: grad shape mismatch");

    ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()), {}};
    if (has_bias)
        g.bias = BasicTensor<T>({Cout});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < Cout; ++o) {
            const T* go = &grad_out.at(n, o, 0, 0);
            if (has_bias) {
                T acc = 0;
                for (std::size_t k = 0; k < Ho * Wo; ++k)
                    acc += go[k];
                g.bias[o] += acc;
            }
            for (std::size_t c = 0; c < Cin; ++c) {
                const T* xc = &x.at(n, c, 0, 0);
                T* gxc = &g.input.at(n, c, 0, 0);
                for (std::size_t p = 0; p < kh; ++p)
                    for (std::size_t q = 0; q < kw; ++q) {
                        const std::size_t widx = ((c * Cout + o) * kh + p) * kw + q;
                        const T w = weight[widx];
                        T acc = 0;
                        for (std::size_t i = 0; i < H; ++i)
                            for (std::size_t j = 0; j < W; ++j) {
                                const T gv = go[(i * stride + p) * Wo + j * stride + q];
                                acc += gv * xc[i * W + j];
                                gxc[i * W + j] += w * gv;
                            }
                        g.weight[widx] += acc;
                    }
            }
        }
    return g;
}

// --- CFA-driven convolution ----------------------------------------------------

template<typename T>
BasicTensor<T> cfa_conv(const BasicTensor<T>& x, const CfaPattern& pattern,
                        const BasicTensor<T>& banks, const BasicTensor<T>& bias, Padding mode)
{
    require_rank(x.shape(), 4, "cfa_conv input");
    require_rank(banks.shape(), 6, "cfa_conv banks");
    const std::size_t P = pattern.period_rows(), Q = pattern.period_cols();
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    require(H % P == 0 && W % Q == 0, "cfa_conv: input size " + shape_string(x.shape())
                                          + " is not a multiple of the CFA period");
    require(banks.dim(0) == P && banks.dim(1) == Q, "cfa_conv: bank grid does not match pattern");
    const std::size_t Cout = banks.dim(2), k = banks.dim(4);
    require(banks.dim(3) == Cin, "cfa_conv: channel mismatch");
    require(banks.dim(5) == k && k % 2 == 1, "cfa_conv: kernel must be square and odd");
    require(bias.empty() || bias.shape() == Shape{Cout}, "cfa_conv: bias shape mismatch");
    const std::size_t pad = k / 2, Hp = H + 2 * pad, Wp = W + 2 * pad;
    const std::size_t bank_size = Cout * Cin * k * k;

    BasicTensor<T> y({N, Cout, H, W});
    std::vector<T> xp(Cin * Hp * Wp);
    for (std::size_t n = 0; n < N; ++n) {
        pad_image(x.data() + n * Cin * H * W, Cin, H, W, pad, mode, xp.data());
        for (std::size_t o = 0; o < Cout; ++o) {
            T* yo = &y.at(n, o, 0, 0);
            if (!bias.empty())
                std::fill(yo, yo + H * W, bias[o]);
        }
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = 0; b < Q; ++b) {
                const T* bank = banks.data() + (a * Q + b) * bank_size;
                for (std::size_t o = 0; o < Cout; ++o) {
                    T* yo = &y.at(n, o, 0, 0);
                    for (std::size_t c = 0; c < Cin; ++c)
                        for (std::size_t p = 0; p < k; ++p)
                            for (std::size_t q = 0; q < k; ++q) {
                                const T w = bank[((o * Cin + c) * k + p) * k + q];
                                for (std::size_t i = a; i < H; i += P) {
                                    const T* in = xp.data() + (c * Hp + i + p) * Wp + q;
                                    T* out = yo + i * W;
                                    for (std::size_t j = b; j < W; j += Q)
                                        out[j] += w * in[j];
                                }
                            }
                }
            }
    }
    return y;
}

template<typename T>
ConvGrads<T> cfa_conv_backward(const BasicTensor<T>& x, const CfaPattern& pattern,
                               const BasicTensor<T>& banks, bool has_bias, Padding mode,
                               const BasicTensor<T>& grad_out)
{
    const std::size_t P = pattern.period_rows(), Q = pattern.period_cols();
    const std::size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = banks.dim(2), k = banks.dim(4);
    require(grad_out.shape() == Shape{N, Cout, H, W}, "cfa_conv_backward: grad shape mismatch");
    const std::size_t pad = k / 2, Hp = H + 2 * pad, Wp = W + 2 * pad;
    const std::size_t bank_size = Cout * Cin * k * k;

    ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(banks.shape()), {}};
    if (has_bias)
        g.bias = BasicTensor<T>({Cout});
    std::vector<T> xp(Cin * Hp * Wp), gxp(Cin * Hp * Wp);
    for (std::size_t n = 0; n < N; ++n) {
        pad_image(x.data() + n * Cin * H * W, Cin, H, W, pad, mode, xp.data());
        std::fill(gxp.begin(), gxp.end(), T(0));
        if (has_bias)
            for (std::size_t o = 0; o < Cout; ++o) {
                const T* go = &grad_out.at(n, o, 0, 0);
                T acc = 0;
                for (std::size_t t = 0; t < H * W; ++t)
                    acc += go[t];
                g.bias[o] += acc;
            }
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = 0; b < Q; ++b) {
                const std::size_t base = (a * Q + b) * bank_size;
                for (std::size_t o = 0; o < Cout; ++o) {
                    const T* go = &grad_out.at(n, o, 0, 0);
                    for (std::size_t c = 0; c < Cin; ++c)
                        for (std::size_t p = 0; p < k; ++p)
                            for (std::size_t q = 0; q < k; ++q) {
                                const std::size_t widx = base + ((o * Cin + c) * k + p) * k + q;
                                const T w = banks[widx];
                                T acc = 0;
                                for (std::size_t i = a; i < H; i += P) {
                                    const std::size_t off = (c * Hp + i + p) * Wp + q;
                                    const T* in = xp.data() + off;
                                    T* gin = gxp.data() + off;
                                    const T* gr = go + i * W;
                                    for (std::size_t j = b; j < W; j += Q) {
                                        acc += gr[j] * in[j];
                                        gin[j] += w * gr[j];
                                    }
                                }
                                g.weight[widx] += acc;
                            }
                }
            }
        unpad_accumulate(gxp.data(), Cin, H, W, pad, mode, g.input.data() + n * Cin * H * W);
    }
    return g;
}

// --- CFA pooling ------------------------------------------------------------

template<typename T>
BasicTensor<T> cfa_pool(const BasicTensor<T>& x, const CfaPattern& pattern)
{
    require_rank(x.shape(), 4, "cfa_pool input");
    const std::size_t P = pattern.period_rows(), Q = pattern.period_cols();
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    require(H % P == 0 && W % Q == 0, "cfa_pool: input size " + shape_string(x.shape())
                                          + " is not a multiple of the CFA period");
    const T c_norm = T(1) / T((H / P) * (W / Q));
    BasicTensor<T> y({N, C, P, Q});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t ch = 0; ch < C; ++ch)
            for (std::size_t a = 0; a < P; ++a)
                for (std::size_t b = 0; b < Q; ++b) {
                    T acc = 0;
                    for (std::size_t i = a; i < H; i += P)
                        for (std::size_t j = b; j < W; j += Q)
                            acc += x.at(n, ch, i, j);
                    y.at(n, ch, a, b) = c_norm * acc;
                }
    return y;
}

template<typename T>
BasicTensor<T> cfa_pool_backward(const BasicTensor<T>& grad_out, const CfaPattern& pattern,
                                 std::size_t height, std::size_t width)
{
    const std::size_t P = pattern.period_rows(), Q = pattern.period_cols();
    require(grad_out.rank() == 4 && grad_out.dim(2) == P && grad_out.dim(3) == Q,
            "cfa_pool_backward: grad shape mismatch");
    require(height % P == 0 && width % Q == 0, "cfa_pool_backward: size not a period multiple");
    const std::size_t N = grad_out.dim(0), C = grad_out.dim(1);
    const T c_norm = T(1) / T((height / P) * (width / Q));
    BasicTensor<T> gx({N, C, height, width});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t ch = 0; ch < C; ++ch)
            for (std::size_t i = 0; i < height; ++i)
                for (std::size_t j = 0; j < width; ++j)
                    gx.at(n, ch, i, j) = c_norm * grad_out.at(n, ch, i % P, j % Q);
    return gx;
}

template<typename T>
BasicTensor<T> periodic_scale(const BasicTensor<T>& x, const BasicTensor<T>& scale)
{
    require_rank(x.shape(), 4, "periodic_scale input");
    require_rank(scale.shape(), 4, "periodic_scale scale");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t P = scale.dim(2), Q = scale.dim(3);
    require(scale.dim(0) == N && scale.dim(1) == C && H % P == 0 && W % Q == 0,
            "periodic_scale: shape mismatch");
    BasicTensor<T> y(x.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j)
                    y.at(n, c, i, j) = x.at(n, c, i, j) * scale.at(n, c, i % P, j % Q);
    return y;
}

template<typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> periodic_scale_backward(
    const BasicTensor<T>& x, const BasicTensor<T>& scale, const BasicTensor<T>& grad_out)
{
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t P = scale.dim(2), Q = scale.dim(3);
    BasicTensor<T> gx(x.shape()), gs(scale.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j) {
                    const T g = grad_out.at(n, c, i, j);
                    gx.at(n, c, i, j) = g * scale.at(n, c, i % P, j % Q);
                    gs.at(n, c, i % P, j % Q) += g * x.at(n, c, i, j);
                }
    return {std::move(gx), std::move(gs)};
}

// --- activations ----------------------------------------------------------

template<typename T>
BasicTensor<T> prelu(const BasicTensor<T>& x, const BasicTensor<T>& slope)
{
    require(x.rank() >= 2 && slope.shape() == Shape{x.dim(1)}, "prelu: slope shape mismatch");
    const std::size_t N = x.dim(0), C = x.dim(1), inner = x.size() / (N * C);
    BasicTensor<T> y(x.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T a = slope[c];
            const T* in = x.data() + (n * C + c) * inner;
            T* out = y.data() + (n * C + c) * inner;
            for (std::size_t t = 0; t < inner; ++t)
                out[t] = in[t] > T(0) ? in[t] : a * in[t];
        }
    return y;
}

template<typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> prelu_backward(
    const BasicTensor<T>& x, const BasicTensor<T>& slope, const BasicTensor<T>& grad_out)
{
    const std::size_t N = x.dim(0), C = x.dim(1), inner = x.size() / (N * C);
    BasicTensor<T> gx(x.shape()), ga(slope.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T a = slope[c];
            const T* in = x.data() + (n * C + c) * inner;
            const T* g = grad_out.data() + (n * C + c) * inner;
            T* out = gx.data() + (n * C + c) * inner;
            T acc = 0;
            for (std::size_t t = 0; t < inner; ++t) {
                if (in[t] > T(0)) {
                    out[t] = g[t];
                } else {
                    out[t] = a * g[t];
                    acc += g[t] * in[t];
                }
            }
            ga[c] += acc;
        }
    return {std::move(gx), std::move(ga)};
}

template<typename T>
BasicTensor<T> gate(const BasicTensor<T>& z)
{
    BasicTensor<T> y(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i)
        y[i] = T(2) / (T(1) + std::exp(-z[i]));
    return y;
}

template<typename T>
BasicTensor<T> gate_backward(const BasicTensor<T>& z, const BasicTensor<T>& grad_out)
{
    BasicTensor<T> g(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-z[i]));
        g[i] = grad_out[i] * T(2) * s * (T(1) - s);
    }
    return g;
}

// --- dense ----------------------------------------------------------------

template<typename T>
BasicTensor<T> fully_connected(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& bias)
{
    require_rank(x.shape(), 2, "fully_connected input");
    require_rank(weight.shape(), 2, "fully_connected weight");
    const std::size_t N = x.dim(0), D = x.dim(1), O = weight.dim(0);
    require(weight.dim(1) == D, "fully_connected: input width mismatch");
    require(bias.empty() || bias.shape() == Shape{O}, "fully_connected: bias shape mismatch");
    BasicTensor<T> y({N, O});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            T acc = bias.empty() ? T(0) : bias[o];
            for (std::size_t d = 0; d < D; ++d)
                acc += weight[o * D + d] * x[n * D + d];
            y[n * O + o] = acc;
        }
    return y;
}

template<typename T>
ConvGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                      const BasicTensor<T>& grad_out)
{
    const std::size_t N = x.dim(0), D = x.dim(1), O = weight.dim(0);
    require(grad_out.shape() == Shape{N, O}, "fully_connected_backward: grad shape mismatch");
    ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                   BasicTensor<T>({O})};
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            const T go = grad_out[n * O + o];
            g.bias[o] += go;
            for (std::size_t d = 0; d < D; ++d) {
                g.weight[o * D + d] += go * x[n * D + d];
                g.input[n * D + d] += go * weight[o * D + d];
            }
        }
    return g;
}

// --- Haar wavelets --------------------------------------------------------

template<typename T>
BasicTensor<T> haar_dwt(const BasicTensor<T>& x)
{
    require_rank(x.shape(), 4, "haar_dwt input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    require(H % 2 == 0 && W % 2 == 0, "haar_dwt: spatial size " + shape_string(x.shape())
                                          + " must be even");
    const std::size_t h = H / 2, w = W / 2;
    BasicTensor<T> y({N, 4 * C, h, w});
    const T half = T(0.5);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    const T a = x.at(n, c, 2 * i, 2 * j), b = x.at(n, c, 2 * i, 2 * j + 1);
                    const T d = x.at(n, c, 2 * i + 1, 2 * j), e = x.at(n, c, 2 * i + 1, 2 * j + 1);
                    y.at(n, c, i, j) = half * (a + b + d + e);
                    y.at(n, C + c, i, j) = half * (a + b - d - e);
                    y.at(n, 2 * C + c, i, j) = half * (a - b + d - e);
                    y.at(n, 3 * C + c, i, j) = half * (a - b - d + e);
                }
    return y;
}

template<typename T>
BasicTensor<T> haar_iwt(const BasicTensor<T>& x)
{
    require_rank(x.shape(), 4, "haar_iwt input");
    const std::size_t N = x.dim(0), C4 = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(C4 % 4 == 0, "haar_iwt: channel count must be a multiple of 4");
    const std::size_t C = C4 / 4;
    BasicTensor<T> y({N, C, 2 * h, 2 * w});
    const T half = T(0.5);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    const T ll = x.at(n, c, i, j), lh = x.at(n, C + c, i, j);
                    const T hl = x.at(n, 2 * C + c, i, j), hh = x.at(n, 3 * C + c, i, j);
                    y.at(n, c, 2 * i, 2 * j) = half * (ll + lh + hl + hh);
                    y.at(n, c, 2 * i, 2 * j + 1) = half * (ll + lh - hl - hh);
                    y.at(n, c, 2 * i + 1, 2 * j) = half * (ll - lh + hl - hh);
                    y.at(n, c, 2 * i + 1, 2 * j + 1) = half * (ll - lh - hl + hh);
                }
    return y;
}

// --- layout helpers -----------------------------------------------------------

template<typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t count)
{
    require_rank(x.shape(), 4, "slice_channels");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    require(begin + count <= C && count > 0, "slice_channels: range out of bounds");
    BasicTensor<T> y({N, count, x.dim(2), x.dim(3)});
    for (std::size_t n = 0; n < N; ++n)
        std::copy_n(x.data() + (n * C + begin) * HW, count * HW, y.data() + n * count * HW);
    return y;
}

template<typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    require_rank(a.shape(), 4, "concat_channels");
    require(b.rank() == 4 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
            "concat_channels: shape mismatch");
    const std::size_t N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), HW = a.dim(2) * a.dim(3);
    BasicTensor<T> y({N, Ca + Cb, a.dim(2), a.dim(3)});
    for (std::size_t n = 0; n < N; ++n) {
        std::copy_n(a.data() + n * Ca * HW, Ca * HW, y.data() + n * (Ca + Cb) * HW);
        std::copy_n(b.data() + n * Cb * HW, Cb * HW, y.data() + (n * (Ca + Cb) + Ca) * HW);
    }
    return y;
}

template<typename T>
BasicTensor<T> sites_to_rows(const BasicTensor<T>& x)
{
    require_rank(x.shape(), 4, "sites_to_rows");
    const std::size_t N = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
    BasicTensor<T> y({N * S, C});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t s = 0; s < S; ++s)
                y[(n * S + s) * C + c] = x[(n * C + c) * S + s];
    return y;
}

template<typename T>
BasicTensor<T> rows_to_sites(const BasicTensor<T>& rows, const Shape& nchw)
{
    const std::size_t N = nchw[0], C = nchw[1], S = nchw[2] * nchw[3];
    require(rows.shape() == Shape{N * S, C}, "rows_to_sites: shape mismatch");
    BasicTensor<T> y(nchw);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t s = 0; s < S; ++s)
                y[(n * C + c) * S + s] = rows[(n * S + s) * C + c];
    return y;
}

#define QUADLAB_INSTANTIATE(T)                                                              \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                   const BasicTensor<T>&, ConvSpec);                        \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                          bool, ConvSpec, const BasicTensor<T>&);           \
    template BasicTensor<T> conv_transpose2d(const BasicTensor<T>&, const BasicTensor<T>&,  \
                                             const BasicTensor<T>&, std::size_t);           \
    template ConvGrads<T> conv_transpose2d_backward(                                        \
        const BasicTensor<T>&, const BasicTensor<T>&, bool, std::size_t,                    \
        const BasicTensor<T>&);                                                             \
    template BasicTensor<T> cfa_conv(const BasicTensor<T>&, const CfaPattern&,              \
                                     const BasicTensor<T>&, const BasicTensor<T>&, Padding); \
    template ConvGrads<T> cfa_conv_backward(const BasicTensor<T>&, const CfaPattern&,       \
                                            const BasicTensor<T>&, bool, Padding,           \
                                            const BasicTensor<T>&);                         \
    template BasicTensor<T> cfa_pool(const BasicTensor<T>&, const CfaPattern&);             \
    template BasicTensor<T> cfa_pool_backward(const BasicTensor<T>&, const CfaPattern&,     \
                                              std::size_t, std::size_t);                    \
    template BasicTensor<T> periodic_scale(const BasicTensor<T>&, const BasicTensor<T>&);   \
    template std::pair<BasicTensor<T>, BasicTensor<T>> periodic_scale_backward(             \
        const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);               \
    template BasicTensor<T> prelu(const BasicTensor<T>&, const BasicTensor<T>&);            \
    template std::pair<BasicTensor<T>, BasicTensor<T>> prelu_backward(                      \
        const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);               \
    template BasicTensor<T> gate(const BasicTensor<T>&);                                    \
    template BasicTensor<T> gate_backward(const BasicTensor<T>&, const BasicTensor<T>&);    \
    template BasicTensor<T> fully_connected(const BasicTensor<T>&, const BasicTensor<T>&,   \
                                            const BasicTensor<T>&);                         \
    template ConvGrads<T> fully_connected_backward(const BasicTensor<T>&,                   \
                                                   const BasicTensor<T>&,                   \
                                                   const BasicTensor<T>&);                  \
    template BasicTensor<T> haar_dwt(const BasicTensor<T>&);                                \
    template BasicTensor<T> haar_iwt(const BasicTensor<T>&);                                \
    template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::size_t, std::size_t); \
    template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);  \
    template BasicTensor<T> sites_to_rows(const BasicTensor<T>&);                           \
    template BasicTensor<T> rows_to_sites(const BasicTensor<T>&, const Shape&);

QUADLAB_INSTANTIATE(float)
QUADLAB_INSTANTIATE(double)

#undef QUADLAB_INSTANTIATE

}  // namespace quadlab::nn
