// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/nn/layers.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace quadlab::nn {

namespace {

struct WindowGeometry {
    std::size_t N, C, H, W, window, heads, head_dim, tokens;
};

WindowGeometry geometry(const Shape& s, std::size_t window, std::size_t heads)
{
    if (s.size() != 4)
        throw std::invalid_argument("window_attention: expected NCHW input");
    WindowGeometry g{s[0], s[1], s[2], s[3], window, heads, 0, window * window};
    if (window == 0 || g.H % window || g.W % window)
        throw std::invalid_argument("window_attention: spatial size " + shape_string(s)
                                    + " is not a multiple of window "
                                    + std::to_string(window));
    if (heads == 0 || g.C % heads)
        throw std::invalid_argument("window_attention: channels not divisible by heads");
    g.head_dim = g.C / heads;
    return g;
}

// Token matrix [tokens, C] of one window.
template<typename T>
void gather(const BasicTensor<T>& x, const WindowGeometry& g, std::size_t n, std::size_t wi,
            std::size_t wj, std::vector<T>& tok)
{
    for (std::size_t a = 0; a < g.window; ++a)
        for (std::size_t b = 0; b < g.window; ++b) {
            const std::size_t t = a * g.window + b;
            for (std::size_t c = 0; c < g.C; ++c)
                tok[t * g.C + c] = x.at(n, c, wi * g.window + a, wj * g.window + b);
        }
}

template<typename T>
void scatter(BasicTensor<T>& y, const WindowGeometry& g, std::size_t n, std::size_t wi,
             std::size_t wj, const std::vector<T>& tok)
{
    for (std::size_t a = 0; a < g.window; ++a)
        for (std::size_t b = 0; b < g.window; ++b) {
            const std::size_t t = a * g.window + b;
            for (std::size_t c = 0; c < g.C; ++c)
                y.at(n, c, wi * g.window + a, wj * g.window + b) = tok[t * g.C + c];
        }
}

// out[t, o] = sum_c in[t, c] * w[o, c] + b[o]
template<typename T>
void project(const std::vector<T>& in, const BasicTensor<T>& w, const BasicTensor<T>& b,
             std::size_t tokens, std::size_t C, std::vector<T>& out)
{
    for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t o = 0; o < C; ++o) {
            T acc = b[o];
            for (std::size_t c = 0; c < C; ++c)
                acc += in[t * C + c] * w[o * C + c];
            out[t * C + o] = acc;
        }
}

// Accumulates weight/bias gradients of `project` and the input gradient.
template<typename T>
void project_backward(const std::vector<T>& in, const BasicTensor<T>& w,
                      const std::vector<T>& gout, std::size_t tokens, std::size_t C,
                      BasicTensor<T>& gw, BasicTensor<T>& gb, std::vector<T>& gin)
{
    for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t o = 0; o < C; ++o) {
            const T g = gout[t * C + o];
            gb[o] += g;
            for (std::size_t c = 0; c < C; ++c) {
                gw[o * C + c] += g * in[t * C + c];
                gin[t * C + c] += g * w[o * C + c];
            }
        }
}

template<typename T>
struct WindowCache {
    std::vector<T> x, q, k, v, attn, o;
};

// Forward for one window. `attn` holds softmax rows per head:
// [heads, tokens, tokens].
template<typename T>
void window_forward(const ParamSet<T>& p, const std::string& key, const WindowGeometry& g,
                    WindowCache<T>& c)
{
    const std::size_t Tn = g.tokens, C = g.C, d = g.head_dim;
    c.q.resize(Tn * C);
    c.k.resize(Tn * C);
    c.v.resize(Tn * C);
    c.o.assign(Tn * C, T(0));
    c.attn.resize(g.heads * Tn * Tn);
    project(c.x, param(p, key + ".wq"), param(p, key + ".bq"), Tn, C, c.q);
    project(c.x, param(p, key + ".wk"), param(p, key + ".bk"), Tn, C, c.k);
    project(c.x, param(p, key + ".wv"), param(p, key + ".bv"), Tn, C, c.v);
    const T scale = T(1) / std::sqrt(T(d));
    for (std::size_t h = 0; h < g.heads; ++h) {
        T* A = c.attn.data() + h * Tn * Tn;
        for (std::size_t i = 0; i < Tn; ++i) {
            T* row = A + i * Tn;
            T m = -std::numeric_limits<T>::infinity();
            for (std::size_t j = 0; j < Tn; ++j) {
                T s = 0;
                for (std::size_t e = 0; e < d; ++e)
                    s += c.q[i * C + h * d + e] * c.k[j * C + h * d + e];
                row[j] = s * scale;
                m = std::max(m, row[j]);
            }
            T z = 0;
            for (std::size_t j = 0; j < Tn; ++j) {
                row[j] = std::exp(row[j] - m);
                z += row[j];
            }
            for (std::size_t j = 0; j < Tn; ++j)
                row[j] /= z;
            for (std::size_t j = 0; j < Tn; ++j)
                for (std::size_t e = 0; e < d; ++e)
                    c.o[i * C + h * d + e] += row[j] * c.v[j * C + h * d + e];
        }
    }
}

}  // namespace

void init_window_attention(ParamSet<float>& p, const std::string& key, std::size_t channels,
                           Rng& rng)
{
    const float bound = 1.0f / std::sqrt(float(channels));
    std::uniform_real_distribution<float> u(-bound, bound);
    for (const char* name : {"q", "k", "v", "o"}) {
        Tensor w({channels, channels});
        for (auto& v : w.values())
            v = u(rng);
        p[key + ".w" + name] = std::move(w);
        p[key + ".b" + name] = Tensor({channels});
    }
}

template<typename T>
BasicTensor<T> window_attention(const ParamSet<T>& p, const std::string& key,
                                const BasicTensor<T>& x, std::size_t window, std::size_t heads)
{
    const WindowGeometry g = geometry(x.shape(), window, heads);
    BasicTensor<T> y(x.shape());
    WindowCache<T> c;
    c.x.resize(g.tokens * g.C);
    std::vector<T> out(g.tokens * g.C);
    const auto& wo = param(p, key + ".wo");
    const auto& bo = param(p, key + ".bo");
    for (std::size_t n = 0; n < g.N; ++n)
        for (std::size_t wi = 0; wi < g.H / window; ++wi)
            for (std::size_t wj = 0; wj < g.W / window; ++wj) {
                gather(x, g, n, wi, wj, c.x);
                window_forward(p, key, g, c);
                project(c.o, wo, bo, g.tokens, g.C, out);
                scatter(y, g, n, wi, wj, out);
            }
    return y;
}

template<typename T>
BasicTensor<T> window_attention_backward(const ParamSet<T>& p, const std::string& key,
                                         const BasicTensor<T>& x, std::size_t window,
                                         std::size_t heads, const BasicTensor<T>& grad_out,
                                         ParamSet<T>& grads)
{
    const WindowGeometry g = geometry(x.shape(), window, heads);
    grad_out.require_same_shape(x, "window_attention_backward");
    const std::size_t Tn = g.tokens, C = g.C, d = g.head_dim;
    const T scale = T(1) / std::sqrt(T(d));

    std::map<std::string, BasicTensor<T>> gp;
    for (const char* name : {"q", "k", "v", "o"}) {
        gp["w" + std::string(name)] = BasicTensor<T>({C, C});
        gp["b" + std::string(name)] = BasicTensor<T>({C});
    }

    BasicTensor<T> gx(x.shape());
    WindowCache<T> c;
    c.x.resize(Tn * C);
    std::vector<T> gy(Tn * C), go(Tn * C), gq(Tn * C), gk(Tn * C), gv(Tn * C), gtok(Tn * C);
    std::vector<T> ga(Tn);

    for (std::size_t n = 0; n < g.N; ++n)
        for (std::size_t wi = 0; wi < g.H / window; ++wi)
            for (std::size_t wj = 0; wj < g.W / window; ++wj) {
                gather(x, g, n, wi, wj, c.x);
                window_forward(p, key, g, c);
                gather(grad_out, g, n, wi, wj, gy);

                std::fill(go.begin(), go.end(), T(0));
                project_backward(c.o, param(p, key + ".wo"), gy, Tn, C, gp["wo"], gp["bo"], go);

                std::fill(gq.begin(), gq.end(), T(0));
                std::fill(gk.begin(), gk.end(), T(0));
                std::fill(gv.begin(), gv.end(), T(0));
                for (std::size_t h = 0; h < g.heads; ++h) {
                    const T* A = c.attn.data() + h * Tn * Tn;
                    for (std::size_t i = 0; i < Tn; ++i) {
                        const T* row = A + i * Tn;
                        // dA[i, j] = go_i . v_j ; dV_j += A[i, j] go_i
                        T rowdot = 0;
                        for (std::size_t j = 0; j < Tn; ++j) {
                            T s = 0;
                            for (std::size_t e = 0; e < d; ++e) {
                                s += go[i * C + h * d + e] * c.v[j * C + h * d + e];
                                gv[j * C + h * d + e] += row[j] * go[i * C + h * d + e];
                            }
                            ga[j] = s;
                            rowdot += s * row[j];
                        }
                        // softmax backward, then the scaled dot product
                        for (std::size_t j = 0; j < Tn; ++j) {
                            const T gs = row[j] * (ga[j] - rowdot) * scale;
                            for (std::size_t e = 0; e < d; ++e) {
                                gq[i * C + h * d + e] += gs * c.k[j * C + h * d + e];
                                gk[j * C + h * d + e] += gs * c.q[i * C + h * d + e];
                            }
                        }
                    }
                }
                std::fill(gtok.begin(), gtok.end(), T(0));
                project_backward(c.x, param(p, key + ".wq"), gq, Tn, C, gp["wq"], gp["bq"], gtok);
                project_backward(c.x, param(p, key + ".wk"), gk, Tn, C, gp["wk"], gp["bk"], gtok);
                project_backward(c.x, param(p, key + ".wv"), gv, Tn, C, gp["wv"], gp["bv"], gtok);
                scatter(gx, g, n, wi, wj, gtok);
            }
    for (auto& [name, t] : gp)
        accumulate(grads, key + "." + name, t);
    return gx;
}

template BasicTensor<float> window_attention(const ParamSet<float>&, const std::string&,
                                             const BasicTensor<float>&, std::size_t, std::size_t);
template BasicTensor<double> window_attention(const ParamSet<double>&, const std::string&,
                                              const BasicTensor<double>&, std::size_t,
                                              std::size_t);
template BasicTensor<float> window_attention_backward(const ParamSet<float>&, const std::string&,
                                                      const BasicTensor<float>&, std::size_t,
                                                      std::size_t, const BasicTensor<float>&,
                                                      ParamSet<float>&);
template BasicTensor<double> window_attention_backward(const ParamSet<double>&,
                                                       const std::string&,
                                                       const BasicTensor<double>&, std::size_t,
                                                       std::size_t, const BasicTensor<double>&,
                                                       ParamSet<double>&);

}  // namespace quadlab::nn
