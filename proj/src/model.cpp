// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/model.hpp>

#include <quadlab/io.hpp>

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace quadlab {

using nn::Padding;
using nn::same;

// DN-RM always descends three stride-2 stages (M -> M/8).
constexpr std::size_t kUnetStages = 3;

// --- config -------------------------------------------------------------------

void ModelConfig::validate() const
{
    auto need = [](bool ok, const char* what) {
        if (!ok)
            throw std::invalid_argument(std::string("model config: ") + what);
    };
    need(channels >= 2 && channels % 2 == 0, "channels must be even and >= 2");
    need(window >= 1, "window must be >= 1");
    need(heads >= 1 && (channels / 2) % heads == 0, "heads must divide channels/2");
    need(ca_depth >= 1, "ca_depth must be >= 1");
    need(n1 >= 1, "n1 must be >= 1");
    need(n2 >= 1, "n2 must be >= 1");
    need(dwt_levels >= 1, "dwt_levels must be >= 1");
    need(kernel % 2 == 1, "kernel must be odd");
    need(aggregation == "concat" || aggregation == "mean",
         "aggregation must be 'concat' or 'mean'");
}

std::string ModelConfig::canonical() const
{
    std::ostringstream s;
    s << "channels=" << channels << "\nwindow=" << window << "\nheads=" << heads
      << "\nca_depth=" << ca_depth << "\nn1=" << n1 << "\nn2=" << n2
      << "\ndwt_levels=" << dwt_levels << "\nkernel=" << kernel
      << "\naggregation=" << aggregation << "\n";
    return s.str();
}

std::size_t ModelConfig::size_multiple() const
{
    std::size_t m = std::size_t(1) << std::max(kUnetStages, dwt_levels);
    m = std::max<std::size_t>(m, 4);
    return std::lcm(m, window << kUnetStages);
}

bool ModelConfig::set(const std::string& key, const std::string& value)
{
    auto number = [&](std::size_t& field) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size())
            throw std::invalid_argument("model config: bad value '" + value + "' for '" + key
                                        + "'");
        field = v;
    };
    if (key == "channels") number(channels);
    else if (key == "window") number(window);
    else if (key == "heads") number(heads);
    else if (key == "ca_depth") number(ca_depth);
    else if (key == "n1") number(n1);
    else if (key == "n2") number(n2);
    else if (key == "dwt_levels") number(dwt_levels);
    else if (key == "kernel") number(kernel);
    else if (key == "aggregation") aggregation = value;
    else return false;
    return true;
}

// --- init -----------------------------------------------------------------------

namespace {

std::string idx(const std::string& base, std::size_t i) { return base + std::to_string(i); }

void init_qbre(ParamSet<float>& p, const std::string& key, const ModelConfig& c, nn::Rng& rng)
{
    nn::init_cfa_conv(p, key + ".head", CfaPattern::quad(), c.channels, 1, c.kernel, rng);
    for (std::size_t d = 0; d < c.ca_depth; ++d) {
        const std::string k = idx(key + ".ca", d);
        nn::init_cfa_attention(p, k + ".attn", c.channels, rng);
        nn::init_residual_conv(p, k + ".rc1", c.channels, rng);
        nn::init_residual_conv(p, k + ".rc2", c.channels, rng);
    }
    nn::init_conv(p, key + ".tail", 1, c.channels, 3, rng);
}

}  // namespace

ModelState init_model(const ModelConfig& c, std::uint64_t seed)
{
    c.validate();
    ModelState s;
    s.config = c;
    auto& p = s.params;
    nn::Rng rng(seed);
    const std::size_t C = c.channels;

    // dn-rm
    nn::init_conv(p, "dn.head", C, 1, 3, rng);
    for (std::size_t st = 0; st < kUnetStages; ++st) {
        const std::size_t ch = C << st;
        for (std::size_t n = 0; n < c.n1; ++n)
            nn::init_sc_block(p, idx(idx("dn.enc", st) + ".sc", n), ch, rng);
        nn::init_conv(p, idx("dn.down", st), 2 * ch, ch, 2, rng);
    }
    for (std::size_t n = 0; n < c.n2; ++n)
        nn::init_sc_block(p, idx("dn.mid.sc", n), C << kUnetStages, rng);
    for (std::size_t st = kUnetStages; st-- > 0;) {
        const std::size_t ch = C << st;
        nn::init_conv_transpose(p, idx("dn.up", st), 2 * ch, ch, 2, rng);
        for (std::size_t n = 0; n < c.n1; ++n)
            nn::init_sc_block(p, idx(idx("dn.dec", st) + ".sc", n), ch, rng);
    }
    nn::init_conv(p, "dn.tail", 1, C, 3, rng);
    init_qbre(p, "dn.qbre", c, rng);

    // rm-dn
    init_qbre(p, "rm.qbre", c, rng);
    nn::init_conv(p, "rm.head", C, 1, 3, rng);
    nn::init_prelu(p, "rm.head.act", C);
    for (std::size_t l = 1; l <= c.dwt_levels; ++l) {
        const std::size_t prev = C << (l - 1);
        nn::init_conv(p, idx("rm.enc", l), 2 * prev, 4 * prev, 1, rng);
        nn::init_prelu(p, idx("rm.enc", l) + ".act", 2 * prev);
    }
    const std::size_t bottom = C << c.dwt_levels;
    nn::init_residual_group(p, "rm.rg1", bottom, rng);
    nn::init_residual_group(p, "rm.rg2", bottom, rng);
    for (std::size_t l = c.dwt_levels; l >= 1; --l) {
        const std::size_t prev = C << (l - 1);
        nn::init_conv(p, idx("rm.dec", l), 4 * prev, 2 * prev, 1, rng);
    }
    nn::init_conv(p, "rm.tail", 1, C, 3, rng);
    nn::init_prelu(p, "rm.tail.act", 1);

    // Fusion starts as the plain mean of both heads.
    p["agg.weight"] = Tensor({1, 2, 1, 1}, 0.5f);
    p["agg.bias"] = Tensor({1});
    return s;
}

std::size_t parameter_count(const ModelState& state)
{
    std::size_t n = 0;
    for (const auto& [k, t] : state.params)
        n += t.size();
    return n;
}

// --- QB-Re ----------------------------------------------------------------------

template<typename T>
BasicTensor<T> qbre_block(const ParamSet<T>& p, const std::string& key, const ModelConfig& cfg,
                          const BasicTensor<T>& x)
{
    const CfaPattern& q = CfaPattern::quad();
    auto h = nn::cfa_conv_layer(p, key + ".head", q, x);
    for (std::size_t d = 0; d < cfg.ca_depth; ++d) {
        const std::string k = idx(key + ".ca", d);
        h = nn::cfa_attention(p, k + ".attn", q, h);
        h = nn::residual_conv(p, k + ".rc1", h);
        h = nn::residual_conv(p, k + ".rc2", h);
    }
    return nn::conv_layer(p, key + ".tail", h, same(3));
}

template<typename T>
BasicTensor<T> qbre_block_backward(const ParamSet<T>& p, const std::string& key,
                                   const ModelConfig& cfg, const BasicTensor<T>& x,
                                   const BasicTensor<T>& grad_out, ParamSet<T>& grads)
{
    const CfaPattern& q = CfaPattern::quad();
    // Inputs of every stage: [attn, rc1, rc2] per depth, then the tail.
    std::vector<BasicTensor<T>> in;
    auto h = nn::cfa_conv_layer(p, key + ".head", q, x);
    for (std::size_t d = 0; d < cfg.ca_depth; ++d) {
        const std::string k = idx(key + ".ca", d);
        in.push_back(h);
        h = nn::cfa_attention(p, k + ".attn", q, h);
        in.push_back(h);
        h = nn::residual_conv(p, k + ".rc1", h);
        in.push_back(h);
        h = nn::residual_conv(p, k + ".rc2", h);
    }
    auto g = nn::conv_layer_backward(p, key + ".tail", h, same(3), grad_out, grads);
    for (std::size_t d = cfg.ca_depth; d-- > 0;) {
        const std::string k = idx(key + ".ca", d);
        g = nn::residual_conv_backward(p, k + ".rc2", in[3 * d + 2], Padding::zero, g, grads);
        g = nn::residual_conv_backward(p, k + ".rc1", in[3 * d + 1], Padding::zero, g, grads);
        g = nn::cfa_attention_backward(p, k + ".attn", q, in[3 * d], g, grads);
    }
    return nn::cfa_conv_layer_backward(p, key + ".head", q, x, g, grads);
}

// --- dn-rm ------------------------------------------------------------------------

namespace {

void require_input(const Shape& s, const ModelConfig& cfg, const char* what)
{
    const std::size_t m = cfg.size_multiple();
    if (s.size() != 4 || s[1] != 1 || s[2] % m || s[3] % m)
        throw std::invalid_argument(std::string(what) + ": expected [N, 1, H, W] with H, W "
                                    "multiples of " + std::to_string(m) + ", got "
                                    + shape_string(s));
}

template<typename T>
struct DnTrace {
    std::vector<std::vector<BasicTensor<T>>> enc_in, dec_in;
    std::vector<BasicTensor<T>> skip, up_in, mid_in;
    BasicTensor<T> tail_in, qbre_in, out;
};

template<typename T>
DnTrace<T> dn_trace(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x)
{
    require_input(x.shape(), c, "branch_dn_rm");
    DnTrace<T> t;
    t.enc_in.resize(kUnetStages);
    t.dec_in.resize(kUnetStages);
    t.skip.resize(kUnetStages);
    t.up_in.resize(kUnetStages);
    auto h = nn::conv_layer(p, "dn.head", x, same(3));
    for (std::size_t st = 0; st < kUnetStages; ++st) {
        for (std::size_t n = 0; n < c.n1; ++n) {
            t.enc_in[st].push_back(h);
            h = nn::sc_block(p, idx(idx("dn.enc", st) + ".sc", n), h, c.window, c.heads);
        }
        t.skip[st] = h;
        h = nn::conv_layer(p, idx("dn.down", st), h, nn::downsample_spec());
    }
    for (std::size_t n = 0; n < c.n2; ++n) {
        t.mid_in.push_back(h);
        h = nn::sc_block(p, idx("dn.mid.sc", n), h, c.window, c.heads);
    }
    for (std::size_t st = kUnetStages; st-- > 0;) {
        t.up_in[st] = h;
        h = nn::upsample_layer(p, idx("dn.up", st), h);
        h += t.skip[st];
        for (std::size_t n = 0; n < c.n1; ++n) {
            t.dec_in[st].push_back(h);
            h = nn::sc_block(p, idx(idx("dn.dec", st) + ".sc", n), h, c.window, c.heads);
        }
    }
    t.tail_in = h;
    t.qbre_in = nn::conv_layer(p, "dn.tail", h, same(3));
    t.out = qbre_block(p, "dn.qbre", c, t.qbre_in);
    return t;
}

}  // namespace

template<typename T>
BasicTensor<T> branch_dn_rm(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x)
{
    return std::move(dn_trace(p, c, x).out);
}

namespace {

template<typename T>
BasicTensor<T> dn_backward(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x,
                           const DnTrace<T>& t, const BasicTensor<T>& grad_out,
                           ParamSet<T>& grads)
{
    auto g = qbre_block_backward(p, "dn.qbre", c, t.qbre_in, grad_out, grads);
    g = nn::conv_layer_backward(p, "dn.tail", t.tail_in, same(3), g, grads);
    std::vector<BasicTensor<T>> gskip(kUnetStages);
    for (std::size_t st = 0; st < kUnetStages; ++st) {
        for (std::size_t n = c.n1; n-- > 0;)
            g = nn::sc_block_backward(p, idx(idx("dn.dec", st) + ".sc", n), t.dec_in[st][n],
                                      c.window, c.heads, g, grads);
        gskip[st] = g;
        g = nn::upsample_layer_backward(p, idx("dn.up", st), t.up_in[st], g, grads);
    }
    for (std::size_t n = c.n2; n-- > 0;)
        g = nn::sc_block_backward(p, idx("dn.mid.sc", n), t.mid_in[n], c.window, c.heads, g,
                                  grads);
    for (std::size_t st = kUnetStages; st-- > 0;) {
        g = nn::conv_layer_backward(p, idx("dn.down", st), t.skip[st], nn::downsample_spec(), g,
                                    grads);
        g += gskip[st];
        for (std::size_t n = c.n1; n-- > 0;)
            g = nn::sc_block_backward(p, idx(idx("dn.enc", st) + ".sc", n), t.enc_in[st][n],
                                      c.window, c.heads, g, grads);
    }
    return nn::conv_layer_backward(p, "dn.head", x, same(3), g, grads);
}

}  // namespace

template<typename T>
BasicTensor<T> branch_dn_rm_backward(const ParamSet<T>& p, const ModelConfig& c,
                                     const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                     ParamSet<T>& grads)
{
    return dn_backward(p, c, x, dn_trace(p, c, x), grad_out, grads);
}

// --- rm-dn ------------------------------------------------------------------------

namespace {

template<typename T>
struct RmTrace {
    BasicTensor<T> qbre_out, head_pre;
    std::vector<BasicTensor<T>> e;        // e[0..L]: encoder features
    std::vector<BasicTensor<T>> enc_pre;  // conv output before PReLU, index l
    std::vector<BasicTensor<T>> dwt;      // haar_dwt(e[l-1]), index l
    BasicTensor<T> rg_mid;                // between the two residual groups
    std::vector<BasicTensor<T>> dec_in;   // input to dec conv l
    BasicTensor<T> tail_in, tail_pre, out;
};

template<typename T>
RmTrace<T> rm_trace(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x)
{
    require_input(x.shape(), c, "branch_rm_dn");
    const std::size_t L = c.dwt_levels;
    RmTrace<T> t;
    t.e.resize(L + 1);
    t.enc_pre.resize(L + 1);
    t.dwt.resize(L + 1);
    t.dec_in.resize(L + 1);
    t.qbre_out = qbre_block(p, "rm.qbre", c, x);
    t.head_pre = nn::conv_layer(p, "rm.head", t.qbre_out, same(3));
    t.e[0] = nn::prelu_layer(p, "rm.head.act", t.head_pre);
    for (std::size_t l = 1; l <= L; ++l) {
        t.dwt[l] = nn::haar_dwt(t.e[l - 1]);
        t.enc_pre[l] = nn::conv_layer(p, idx("rm.enc", l), t.dwt[l], same(1));
        t.e[l] = nn::prelu_layer(p, idx("rm.enc", l) + ".act", t.enc_pre[l]);
    }
    t.rg_mid = nn::residual_group(p, "rm.rg1", t.e[L]);
    auto h = nn::residual_group(p, "rm.rg2", t.rg_mid);
    for (std::size_t l = L; l >= 1; --l) {
        t.dec_in[l] = h;
        h = nn::haar_iwt(nn::conv_layer(p, idx("rm.dec", l), h, same(1)));
        h += t.e[l - 1];
    }
    t.tail_in = h;
    t.tail_pre = nn::conv_layer(p, "rm.tail", h, same(3));
    t.out = nn::prelu_layer(p, "rm.tail.act", t.tail_pre);
    return t;
}

}  // namespace

template<typename T>
BasicTensor<T> branch_rm_dn(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x)
{
    return std::move(rm_trace(p, c, x).out);
}

namespace {

template<typename T>
BasicTensor<T> rm_backward(const ParamSet<T>& p, const ModelConfig& c, const BasicTensor<T>& x,
                           const RmTrace<T>& t, const BasicTensor<T>& grad_out,
                           ParamSet<T>& grads)
{
    const std::size_t L = c.dwt_levels;
    auto g = nn::prelu_layer_backward(p, "rm.tail.act", t.tail_pre, grad_out, grads);
    g = nn::conv_layer_backward(p, "rm.tail", t.tail_in, same(3), g, grads);
    // ge[l] collects the skip gradient reaching encoder feature e[l].
    std::vector<BasicTensor<T>> ge(L + 1);
    for (std::size_t l = 1; l <= L; ++l) {
        ge[l - 1] = g;
        g = nn::conv_layer_backward(p, idx("rm.dec", l), t.dec_in[l], same(1), nn::haar_dwt(g),
                                    grads);
    }
    g = nn::residual_group_backward(p, "rm.rg2", t.rg_mid, g, grads);
    g = nn::residual_group_backward(p, "rm.rg1", t.e[L], g, grads);
    for (std::size_t l = L; l >= 1; --l) {
        g = nn::prelu_layer_backward(p, idx("rm.enc", l) + ".act", t.enc_pre[l], g, grads);
        g = nn::conv_layer_backward(p, idx("rm.enc", l), t.dwt[l], same(1), g, grads);
        g = nn::haar_iwt(g);
        g += ge[l - 1];
    }
    g = nn::prelu_layer_backward(p, "rm.head.act", t.head_pre, g, grads);
    g = nn::conv_layer_backward(p, "rm.head", t.qbre_out, same(3), g, grads);
    return qbre_block_backward(p, "rm.qbre", c, x, g, grads);
}

}  // namespace

template<typename T>
BasicTensor<T> branch_rm_dn_backward(const ParamSet<T>& p, const ModelConfig& c,
                                     const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                                     ParamSet<T>& grads)
{
    return rm_backward(p, c, x, rm_trace(p, c, x), grad_out, grads);
}

// --- whole model --------------------------------------------------------------------

template<typename T>
BasicTensor<T> aggregate(const ParamSet<T>& p, const ModelConfig& cfg,
                         const BasicTensor<T>& xr, const BasicTensor<T>& yd)
{
    xr.require_same_shape(yd, "aggregate");
    if (cfg.aggregation == "mean") {
        auto out = xr + yd;
        out *= T(0.5);
        return out;
    }
    return nn::conv_layer(p, "agg", nn::concat_channels(xr, yd), same(1));
}

template<typename T>
BasicTensor<T> model_forward(const ParamSet<T>& p, const ModelConfig& cfg, const BasicTensor<T>& x)
{
    return aggregate(p, cfg, branch_rm_dn(p, cfg, x), branch_dn_rm(p, cfg, x));
}

template<typename T>
BasicTensor<T> model_forward_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                                      const BasicTensor<T>& x, const std::type_identity_t<OutputGradient<T>>& grad_of,
                                      ParamSet<T>& grads, BasicTensor<T>* input_grad)
{
    const auto tr = rm_trace(p, cfg, x);
    const auto td = dn_trace(p, cfg, x);
    BasicTensor<T> pred = aggregate(p, cfg, tr.out, td.out);
    const BasicTensor<T> grad_out = grad_of(pred);
    pred.require_same_shape(grad_out, "model_forward_backward");
    BasicTensor<T> gx, gy;
    if (cfg.aggregation == "mean") {
        gx = grad_out;
        gx *= T(0.5);
        gy = gx;
    } else {
        auto gcat = nn::conv_layer_backward(p, "agg", nn::concat_channels(tr.out, td.out),
                                            same(1), grad_out, grads);
        gx = nn::slice_channels(gcat, 0, 1);
        gy = nn::slice_channels(gcat, 1, 1);
    }
    auto g = rm_backward(p, cfg, x, tr, gx, grads);
    g += dn_backward(p, cfg, x, td, gy, grads);
    if (input_grad)
        *input_grad = std::move(g);
    return pred;
}

template<typename T>
BasicTensor<T> model_backward(const ParamSet<T>& p, const ModelConfig& cfg,
                              const BasicTensor<T>& x, const BasicTensor<T>& grad_out,
                              ParamSet<T>& grads)
{
    BasicTensor<T> gx;
    model_forward_backward(
        p, cfg, x, [&](const BasicTensor<T>&) { return grad_out; }, grads, &gx);
    return gx;
}

template<typename T>
BasicTensor<T> dwt_cascade_roundtrip(const BasicTensor<T>& x, std::size_t levels)
{
    BasicTensor<T> h = x;
    for (std::size_t l = 0; l < levels; ++l)
        h = nn::haar_dwt(h);
    for (std::size_t l = 0; l < levels; ++l)
        h = nn::haar_iwt(h);
    return h;
}

MosaicImage forward(const MosaicImage& quad, const ModelState& state)
{
    if (!(quad.pattern == CfaPattern::quad()))
        throw std::invalid_argument("forward: input must be a Quad Bayer mosaic, got '"
                                    + quad.pattern.label_string() + "'");
    Tensor x({1, 1, quad.height, quad.width}, quad.samples);
    Tensor y = model_forward(state.params, state.config, x);
    if (!y.all_finite())
        throw NumericError("forward: non-finite output");
    MosaicImage out(quad.height, quad.width, CfaPattern::bayer());
    out.black_level = quad.black_level;
    out.white_level = quad.white_level;
    std::copy(y.values().begin(), y.values().end(), out.samples.begin());
    return out;
}

// --- checkpoints ------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'Q', 'L', 'C', 'K', 'P', 'T', '0', '1'};
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void save_state(const ModelState& state, const std::filesystem::path& path)
{
    std::ostringstream out(std::ios::binary);
    const std::string cfg = state.config.canonical();
    out.write(kMagic, sizeof kMagic);
    write_u64(out, fnv1a64(cfg));
    write_u64(out, cfg.size());
    out.write(cfg.data(), std::streamsize(cfg.size()));
    write_u64(out, state.params.size());
    for (const auto& [key, t] : state.params) {
        write_u64(out, key.size());
        out.write(key.data(), std::streamsize(key.size()));
        write_tensor(out, t);
    }
    write_file_atomic(path, out.str());
}

ModelState load_state(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path), std::ios::binary);
    const std::string where = path.string() + ": ";
    char magic[8] = {};
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic))
        throw DataError(where + "bad checkpoint magic");
    const std::uint64_t digest = read_u64(in);
    const std::uint64_t len = read_u64(in);
    if (len > (1u << 16))
        throw DataError(where + "implausible config length");
    std::string text(len, '\0');
    if (!in.read(text.data(), std::streamsize(len)))
        throw DataError(where + "truncated config");
    if (fnv1a64(text) != digest)
        throw DataError(where + "config digest mismatch");

    ModelState s;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(where + "malformed config line '" + line + "'");
        try {
            if (!s.config.set(line.substr(0, eq), line.substr(eq + 1)))
                throw DataError(where + "unknown config key '" + line.substr(0, eq) + "'");
        } catch (const std::invalid_argument& e) {
            throw DataError(where + e.what());
        }
    }
    try {
        s.config.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(where + e.what());
    }

    const std::uint64_t count = read_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t klen = read_u64(in);
        if (klen == 0 || klen > 1024)
            throw DataError(where + "implausible key length");
        std::string key(klen, '\0');
        if (!in.read(key.data(), std::streamsize(klen)))
            throw DataError(where + "truncated key");
        s.params[key] = read_tensor(in);
    }

    // The key set and shapes are fixed by the config.
    const ModelState ref = init_model(s.config, 0);
    for (const auto& [key, t] : ref.params) {
        auto it = s.params.find(key);
        if (it == s.params.end())
            throw DataError(where + "missing tensor '" + key + "'");
        if (it->second.shape() != t.shape())
            throw DataError(where + "tensor '" + key + "' has shape "
                            + shape_string(it->second.shape()) + ", expected "
                            + shape_string(t.shape()));
        if (!it->second.all_finite())
            throw DataError(where + "tensor '" + key + "' holds non-finite values");
    }
    for (const auto& [key, t] : s.params)
        if (!ref.params.count(key))
            throw DataError(where + "unexpected tensor '" + key + "'");
    return s;
}

#define QUADLAB_INSTANTIATE(T)                                                                 \
    template BasicTensor<T> qbre_block(const ParamSet<T>&, const std::string&,                 \
                                       const ModelConfig&, const BasicTensor<T>&);             \
    template BasicTensor<T> qbre_block_backward(const ParamSet<T>&, const std::string&,        \
                                                const ModelConfig&, const BasicTensor<T>&,     \
                                                const BasicTensor<T>&, ParamSet<T>&);          \
    template BasicTensor<T> branch_dn_rm(const ParamSet<T>&, const ModelConfig&,               \
                                         const BasicTensor<T>&);                               \
    template BasicTensor<T> branch_dn_rm_backward(const ParamSet<T>&, const ModelConfig&,      \
                                                  const BasicTensor<T>&,                       \
                                                  const BasicTensor<T>&, ParamSet<T>&);        \
    template BasicTensor<T> branch_rm_dn(const ParamSet<T>&, const ModelConfig&,               \
                                         const BasicTensor<T>&);                               \
    template BasicTensor<T> branch_rm_dn_backward(const ParamSet<T>&, const ModelConfig&,      \
                                                  const BasicTensor<T>&,                       \
                                                  const BasicTensor<T>&, ParamSet<T>&);        \
    template BasicTensor<T> aggregate(const ParamSet<T>&, const ModelConfig&,                  \
                                      const BasicTensor<T>&, const BasicTensor<T>&);           \
    template BasicTensor<T> model_forward(const ParamSet<T>&, const ModelConfig&,              \
                                          const BasicTensor<T>&);                              \
    template BasicTensor<T> model_backward(const ParamSet<T>&, const ModelConfig&,             \
                                           const BasicTensor<T>&, const BasicTensor<T>&,       \
                                           ParamSet<T>&);                                      \
    template BasicTensor<T> model_forward_backward(const ParamSet<T>&, const ModelConfig&,     \
                                                   const BasicTensor<T>&,                      \
                                                   const std::type_identity_t<OutputGradient<T>>&, \
                                                   ParamSet<T>&,                               \
                                                   BasicTensor<T>*);                           \
    template BasicTensor<T> dwt_cascade_roundtrip(const BasicTensor<T>&, std::size_t);

QUADLAB_INSTANTIATE(float)
QUADLAB_INSTANTIATE(double)

#undef QUADLAB_INSTANTIATE

}  // namespace quadlab
