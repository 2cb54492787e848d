#include "uavdt/neural.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uavdt::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

auto ei(std::size_t n) { return static_cast<Eigen::Index>(n); }

// C[MxN] += A[MxK] * B[KxN]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    MapM(c, ei(m), ei(n)).noalias() += MapC(a, ei(m), ei(k)) * MapC(b, ei(k), ei(n));
}

// C[MxN] += A[MxK] * B[NxK]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    MapM(c, ei(m), ei(n)).noalias() += MapC(a, ei(m), ei(k)) * MapC(b, ei(n), ei(k)).transpose();
}

// C[MxN] += A[KxM]^T * B[KxN]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c)
{
    MapM(c, ei(m), ei(n)).noalias() += MapC(a, ei(k), ei(m)).transpose() * MapC(b, ei(k), ei(n));
}

void relu_inplace(Tensor& t)
{
    for (auto& v : t.data)
        v = v > 0.0 ? v : 0.0;
}

// dz = da * (a > 0)
void relu_mask(const Tensor& act, Tensor& grad)
{
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(act.data[i] > 0.0))
            grad.data[i] = 0.0;
}

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void channel_attention_forward(const ChannelAttention& ca, std::span<const double> params, const Tensor& x, Tape& t)
{
    const std::size_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    t.ca_desc = Tensor({b, c});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* px = x.data.data() + (n * c + ch) * hw;
            double s = 0.0;
            for (std::size_t p = 0; p < hw; ++p)
                s += px[p];
            t.ca_desc.data[n * c + ch] = s / static_cast<double>(hw);
        }
    dense_forward(ca.squeeze, params, t.ca_desc, t.ca_hidden);
    relu_inplace(t.ca_hidden);
    dense_forward(ca.excite, params, t.ca_hidden, t.ca_gate);
    for (auto& v : t.ca_gate.data)
        v = sigmoid(v);
    t.ca_out = Tensor(x.shape);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = t.ca_gate.data[n * c + ch];
            const std::size_t base = (n * c + ch) * hw;
            for (std::size_t p = 0; p < hw; ++p)
                t.ca_out.data[base + p] = x.data[base + p] * g;
        }
}

Tensor channel_attention_backward(const ChannelAttention& ca, std::span<const double> params, const Tensor& x,
                                  const Tape& t, const Tensor& dy, std::span<double> grads)
{
    const std::size_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor dx(x.shape);
    Tensor dz({b, c});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = t.ca_gate.data[n * c + ch];
            const std::size_t base = (n * c + ch) * hw;
            double dg = 0.0;
            for (std::size_t p = 0; p < hw; ++p) {
                dx.data[base + p] = dy.data[base + p] * g;
                dg += dy.data[base + p] * x.data[base + p];
            }
            dz.data[n * c + ch] = dg * g * (1.0 - g);
        }
    Tensor dhidden;
    dense_backward(ca.excite, params, t.ca_hidden, dz, grads, &dhidden);
    relu_mask(t.ca_hidden, dhidden);
    Tensor ddesc;
    dense_backward(ca.squeeze, params, t.ca_desc, dhidden, grads, &ddesc);
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double d = ddesc.data[n * c + ch] * inv;
            const std::size_t base = (n * c + ch) * hw;
            for (std::size_t p = 0; p < hw; ++p)
                dx.data[base + p] += d;
        }
    return dx;
}

void spatial_attention_forward(const SpatialAttention& sa, std::span<const double> params, const Tensor& x, Tape& t)
{
    const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), hw = h * w;
    t.sa_maps = Tensor({b, 2, h, w});
    t.sa_argmax.assign(b * hw, 0);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
            double s = 0.0;
            double mx = x.data[(n * c) * hw + p];
            int arg = 0;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double v = x.data[(n * c + ch) * hw + p];
                s += v;
                if (v > mx) {
                    mx = v;
                    arg = static_cast<int>(ch);
                }
            }
            t.sa_maps.data[(n * 2) * hw + p] = s / static_cast<double>(c);
            t.sa_maps.data[(n * 2 + 1) * hw + p] = mx;
            t.sa_argmax[n * hw + p] = arg;
        }
    conv2d_forward(sa.conv, params, t.sa_maps, t.sa_gate);
    for (auto& v : t.sa_gate.data)
        v = sigmoid(v);
    t.att_out = Tensor(x.shape);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < hw; ++p)
                t.att_out.data[(n * c + ch) * hw + p] = x.data[(n * c + ch) * hw + p] * t.sa_gate.data[n * hw + p];
}

Tensor spatial_attention_backward(const SpatialAttention& sa, std::span<const double> params, const Tensor& x,
                                  const Tape& t, const Tensor& dy, std::span<double> grads)
{
    const std::size_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor dx(x.shape);
    Tensor dz({b, 1, x.dim(2), x.dim(3)});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
            const double g = t.sa_gate.data[n * hw + p];
            double dg = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t i = (n * c + ch) * hw + p;
                dx.data[i] = dy.data[i] * g;
                dg += dy.data[i] * x.data[i];
            }
            dz.data[n * hw + p] = dg * g * (1.0 - g);
        }
    Tensor dmaps;
    conv2d_backward(sa.conv, params, t.sa_maps, dz, grads, &dmaps);
    const double inv = 1.0 / static_cast<double>(c);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
            const double dmean = dmaps.data[(n * 2) * hw + p] * inv;
            for (std::size_t ch = 0; ch < c; ++ch)
                dx.data[(n * c + ch) * hw + p] += dmean;
            const auto arg = static_cast<std::size_t>(t.sa_argmax[n * hw + p]);
            dx.data[(n * c + arg) * hw + p] += dmaps.data[(n * 2 + 1) * hw + p];
        }
    return dx;
}

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_str(std::string& out, const std::string& s)
{
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    Reader(const std::string& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::uint64_t uint(int width)
    {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string str()
    {
        const auto n = static_cast<std::size_t>(uint(4));
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    double f64()
    {
        const std::uint64_t bits = uint(8);
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size())
            throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[8] = {'U', 'A', 'V', 'D', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)), data(shape_product(shape), fill) {}

std::size_t shape_product(const std::vector<std::size_t>& shape)
{
    std::size_t n = 1;
    for (auto d : shape)
        n *= d;
    return n;
}

const ParamBlock& NetworkParams::block(const std::string& name) const
{
    for (const auto& b : blocks)
        if (b.name == name)
            return b;
    throw ContractError("no parameter block named " + name);
}

std::span<double> NetworkParams::view(const std::string& name)
{
    const auto& b = block(name);
    return {values.data() + b.offset, b.size};
}

std::span<const double> NetworkParams::view(const std::string& name) const
{
    const auto& b = block(name);
    return {values.data() + b.offset, b.size};
}

bool NetworkParams::same_layout(const NetworkParams& other) const
{
    if (blocks.size() != other.blocks.size() || values.size() != other.values.size())
        return false;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].name != other.blocks[i].name || blocks[i].shape != other.blocks[i].shape)
            return false;
    return true;
}

NetSpec NetSpec::paper_actor(int grid)
{
    NetSpec s;
    s.preset = "paper";
    s.height = s.width = grid;
    s.branch_channels = {128, 256};
    s.fusion_channels = {1024, 2048};
    s.shared_fc = {4096, 2048};
    s.head_hidden = {512, 128};
    s.attention_reduction = 16;
    s.spatial_kernel = 7;
    s.heads = 3;
    s.head_activation = HeadActivation::Tanh;
    return s;
}

NetSpec NetSpec::paper_critic(int grid)
{
    NetSpec s = paper_actor(grid);
    s.heads = 1;
    s.action_inputs = 3;
    s.head_activation = HeadActivation::Linear;
    return s;
}

NetSpec NetSpec::desk_actor(int grid)
{
    NetSpec s;
    s.preset = "desk";
    s.height = s.width = grid;
    return s;
}

NetSpec NetSpec::desk_critic(int grid)
{
    NetSpec s = desk_actor(grid);
    s.heads = 1;
    s.action_inputs = 3;
    s.head_activation = HeadActivation::Linear;
    return s;
}

// ---- primitives ----

namespace {

// For every kernel tap (ky, kx) and output pixel q, the input offset read
// by that tap, or -1 where it falls in the padding. Row r = ky * k + kx.
std::vector<long> tap_index(const Conv2d& c, std::size_t h, std::size_t w, std::size_t ho, std::size_t wo)
{
    const auto kk = static_cast<std::size_t>(c.kernel);
    std::vector<long> idx(kk * kk * ho * wo);
    std::size_t i = 0;
    for (std::size_t ky = 0; ky < kk; ++ky)
        for (std::size_t kx = 0; kx < kk; ++kx)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    const long iy = static_cast<long>(oy) * c.stride - c.padding + static_cast<long>(ky);
                    const long ix = static_cast<long>(ox) * c.stride - c.padding + static_cast<long>(kx);
                    const bool inside = iy >= 0 && iy < static_cast<long>(h) && ix >= 0 && ix < static_cast<long>(w);
                    idx[i++] = inside ? iy * static_cast<long>(w) + ix : -1;
                }
    return idx;
}

// Scratch reused across calls so the hot path does not allocate.
std::vector<double>& scratch(int which, std::size_t n)
{
    thread_local std::vector<double> bufs[3];
    auto& v = bufs[which];
    if (v.size() < n)
        v.resize(n);
    return v;
}

// Batched column matrix [in_c * k * k, b * p]; sample s occupies columns
// s * p .. (s + 1) * p.
void im2col_batch(const Conv2d& c, const Tensor& x, const std::vector<long>& idx, std::size_t p, double* col)
{
    const std::size_t b = x.dim(0), hw = x.dim(2) * x.dim(3);
    const std::size_t taps = static_cast<std::size_t>(c.kernel * c.kernel), n = b * p;
    const auto in_c = static_cast<std::size_t>(c.in_c);
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t ci = 0; ci < in_c; ++ci) {
            const double* src = x.data.data() + (s * in_c + ci) * hw;
            for (std::size_t t = 0; t < taps; ++t) {
                const long* ix = idx.data() + t * p;
                double* dst = col + (ci * taps + t) * n + s * p;
                for (std::size_t q = 0; q < p; ++q)
                    dst[q] = ix[q] < 0 ? 0.0 : src[ix[q]];
            }
        }
}

} // namespace

void conv2d_forward(const Conv2d& c, std::span<const double> params, const Tensor& x, Tensor& y)
{
    if (x.shape.size() != 4 || x.dim(1) != static_cast<std::size_t>(c.in_c))
        throw ContractError("conv2d: expected input with " + std::to_string(c.in_c) + " channels");
    const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
    const auto ho = static_cast<std::size_t>(c.out_size(static_cast<int>(h)));
    const auto wo = static_cast<std::size_t>(c.out_size(static_cast<int>(w)));
    const auto kk = static_cast<std::size_t>(c.kernel);
    const std::size_t krows = static_cast<std::size_t>(c.in_c) * kk * kk;
    const std::size_t p = ho * wo, n = b * p;
    const auto co = static_cast<std::size_t>(c.out_c);

    auto& col = scratch(0, krows * n);
    auto& out = scratch(1, co * n);
    im2col_batch(c, x, tap_index(c, h, w, ho, wo), p, col.data());
    for (std::size_t o = 0; o < co; ++o)
        std::fill(out.begin() + static_cast<long>(o * n), out.begin() + static_cast<long>((o + 1) * n),
                  params[c.b_off + o]);
    gemm_nn(co, n, krows, params.data() + c.w_off, col.data(), out.data());
    y.shape = {b, co, ho, wo};
    y.data.resize(b * co * p);
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t o = 0; o < co; ++o)
            std::copy_n(out.data() + o * n + s * p, p, y.data.data() + (s * co + o) * p);
}

void conv2d_backward(const Conv2d& c, std::span<const double> params, const Tensor& x, const Tensor& dy,
                     std::span<double> grads, Tensor* dx)
{
    const std::size_t b = dy.dim(0), co = dy.dim(1), ho = dy.dim(2), wo = dy.dim(3);
    const std::size_t h = x.dim(2), w = x.dim(3);
    const std::size_t p = ho * wo, n = b * p;
    const auto kk = static_cast<std::size_t>(c.kernel);
    const std::size_t krows = static_cast<std::size_t>(c.in_c) * kk * kk;
    const auto idx = tap_index(c, h, w, ho, wo);

    auto& dyc = scratch(1, co * n);
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t o = 0; o < co; ++o)
            std::copy_n(dy.data.data() + (s * co + o) * p, p, dyc.data() + o * n + s * p);

    if (!grads.empty()) {
        for (std::size_t o = 0; o < co; ++o) {
            double acc = 0.0;
            for (std::size_t q = 0; q < n; ++q)
                acc += dyc[o * n + q];
            grads[c.b_off + o] += acc;
        }
        auto& col = scratch(0, krows * n);
        im2col_batch(c, x, idx, p, col.data());
        gemm_nt(co, krows, n, dyc.data(), col.data(), grads.data() + c.w_off);
    }
    if (!dx)
        return;
    auto& dcol = scratch(2, krows * n);
    std::fill(dcol.begin(), dcol.begin() + static_cast<long>(krows * n), 0.0);
    gemm_tn(krows, n, co, params.data() + c.w_off, dyc.data(), dcol.data());
    *dx = Tensor(x.shape);
    const std::size_t hw = h * w, taps = kk * kk;
    const auto in_c = static_cast<std::size_t>(c.in_c);
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t ci = 0; ci < in_c; ++ci) {
            double* dst = dx->data.data() + (s * in_c + ci) * hw;
            for (std::size_t t = 0; t < taps; ++t) {
                const long* ix = idx.data() + t * p;
                const double* src = dcol.data() + (ci * taps + t) * n + s * p;
                for (std::size_t q = 0; q < p; ++q)
                    if (ix[q] >= 0)
                        dst[ix[q]] += src[q];
            }
        }
}

void dense_forward(const Dense& d, std::span<const double> params, const Tensor& x, Tensor& y)
{
    const std::size_t b = x.dim(0);
    if (x.size() != b * static_cast<std::size_t>(d.in))
        throw ContractError("dense: expected " + std::to_string(d.in) + " input features");
    const auto out = static_cast<std::size_t>(d.out);
    y = Tensor({b, out});
    for (std::size_t s = 0; s < b; ++s)
        std::memcpy(y.data.data() + s * out, params.data() + d.b_off, out * sizeof(double));
    gemm_nn(b, out, static_cast<std::size_t>(d.in), x.data.data(), params.data() + d.w_off, y.data.data());
}

void dense_backward(const Dense& d, std::span<const double> params, const Tensor& x, const Tensor& dy,
                    std::span<double> grads, Tensor* dx)
{
    const std::size_t b = x.dim(0);
    const auto in = static_cast<std::size_t>(d.in), out = static_cast<std::size_t>(d.out);
    if (!grads.empty()) {
        gemm_tn(in, out, b, x.data.data(), dy.data.data(), grads.data() + d.w_off);
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t o = 0; o < out; ++o)
                grads[d.b_off + o] += dy.data[s * out + o];
    }
    if (dx) {
        *dx = Tensor({b, in});
        gemm_nt(b, in, out, dy.data.data(), params.data() + d.w_off, dx->data.data());
    }
}

// ---- network ----

Network::Network(NetSpec spec) : spec_(std::move(spec))
{
    if (spec_.branches < 1 || spec_.branch_channels.empty() || spec_.heads < 1 || spec_.height < 1
        || spec_.width < 1)
        throw ContractError("network spec needs >= 1 branch, branch channels, >= 1 head and a positive input size");

    auto add_block = [&](const std::string& name, std::vector<std::size_t> shape) {
        ParamBlock blk{name, shape, layout_.values.size(), shape_product(shape)};
        layout_.values.resize(layout_.values.size() + blk.size, 0.0);
        layout_.blocks.push_back(std::move(blk));
        return layout_.blocks.back().offset;
    };
    auto make_conv = [&](const std::string& name, int in, int out, int k, int stride, int pad) {
        Conv2d c{in, out, k, stride, pad, 0, 0};
        c.w_off = add_block(name + ".w", {static_cast<std::size_t>(out),
                                          static_cast<std::size_t>(in) * static_cast<std::size_t>(k * k)});
        c.b_off = add_block(name + ".b", {static_cast<std::size_t>(out)});
        return c;
    };
    auto make_dense = [&](const std::string& name, int in, int out) {
        Dense d{in, out, 0, 0};
        d.w_off = add_block(name + ".w", {static_cast<std::size_t>(in), static_cast<std::size_t>(out)});
        d.b_off = add_block(name + ".b", {static_cast<std::size_t>(out)});
        return d;
    };

    int h = spec_.height, w = spec_.width;
    int bh = h, bw = w;
    for (int br = 0; br < spec_.branches; ++br) {
        std::vector<Conv2d> convs;
        int in = 1;
        bh = h;
        bw = w;
        for (std::size_t l = 0; l < spec_.branch_channels.size(); ++l) {
            convs.push_back(make_conv("branch" + std::to_string(br) + ".conv" + std::to_string(l), in,
                                      spec_.branch_channels[l], spec_.kernel, spec_.stride, spec_.padding));
            in = spec_.branch_channels[l];
            bh = convs.back().out_size(bh);
            bw = convs.back().out_size(bw);
        }
        branch_convs_.push_back(std::move(convs));
    }
    int ch = spec_.branch_channels.back() * spec_.branches;
    for (std::size_t l = 0; l < spec_.fusion_channels.size(); ++l) {
        fusion_convs_.push_back(make_conv("fusion.conv" + std::to_string(l), ch, spec_.fusion_channels[l],
                                          spec_.kernel, spec_.stride, spec_.padding));
        ch = spec_.fusion_channels[l];
        bh = fusion_convs_.back().out_size(bh);
        bw = fusion_convs_.back().out_size(bw);
    }
    if (bh < 1 || bw < 1)
        throw ContractError("network spec reduces the input below 1x1");
    fused_channels_ = ch;
    feat_h_ = bh;
    feat_w_ = bw;
    if (spec_.attention) {
        const int hidden = std::max(1, ch / std::max(1, spec_.attention_reduction));
        channel_att_.squeeze = make_dense("attention.channel.squeeze", ch, hidden);
        channel_att_.excite = make_dense("attention.channel.excite", hidden, ch);
        spatial_att_.conv = make_conv("attention.spatial.conv", 2, 1, spec_.spatial_kernel, 1, spec_.spatial_kernel / 2);
    }
    int feat = ch + spec_.action_inputs;
    for (std::size_t l = 0; l < spec_.shared_fc.size(); ++l) {
        shared_.push_back(make_dense("shared.fc" + std::to_string(l), feat, spec_.shared_fc[l]));
        feat = spec_.shared_fc[l];
    }
    for (int hd = 0; hd < spec_.heads; ++hd) {
        std::vector<Dense> layers;
        int in = feat;
        for (std::size_t l = 0; l < spec_.head_hidden.size(); ++l) {
            layers.push_back(make_dense("head" + std::to_string(hd) + ".fc" + std::to_string(l), in,
                                        spec_.head_hidden[l]));
            in = spec_.head_hidden[l];
        }
        layers.push_back(make_dense("head" + std::to_string(hd) + ".out", in, 1));
        heads_.push_back(std::move(layers));
    }
}

std::vector<std::string> Network::describe() const
{
    std::vector<std::string> lines;
    auto shape3 = [](int c, int h, int w) {
        return "[" + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
    };
    for (std::size_t br = 0; br < branch_convs_.size(); ++br) {
        int h = spec_.height, w = spec_.width;
        for (std::size_t l = 0; l < branch_convs_[br].size(); ++l) {
            const auto& c = branch_convs_[br][l];
            const int ho = c.out_size(h), wo = c.out_size(w);
            lines.push_back("branch" + std::to_string(br) + ".conv" + std::to_string(l) + " " + shape3(c.in_c, h, w)
                            + " -> " + shape3(c.out_c, ho, wo));
            h = ho;
            w = wo;
        }
    }
    int h = spec_.height, w = spec_.width;
    for (const auto& c : branch_convs_.front()) {
        h = c.out_size(h);
        w = c.out_size(w);
    }
    for (std::size_t l = 0; l < fusion_convs_.size(); ++l) {
        const auto& c = fusion_convs_[l];
        const int ho = c.out_size(h), wo = c.out_size(w);
        lines.push_back("fusion.conv" + std::to_string(l) + " " + shape3(c.in_c, h, w) + " -> "
                        + shape3(c.out_c, ho, wo));
        h = ho;
        w = wo;
    }
    if (spec_.attention)
        lines.push_back("attention " + shape3(fused_channels_, h, w) + " -> " + shape3(fused_channels_, h, w));
    lines.push_back("pool " + shape3(fused_channels_, h, w) + " -> [" + std::to_string(fused_channels_) + "]");
    int feat = fused_channels_ + spec_.action_inputs;
    if (spec_.action_inputs > 0)
        lines.push_back("concat action -> [" + std::to_string(feat) + "]");
    for (std::size_t l = 0; l < shared_.size(); ++l) {
        lines.push_back("shared.fc" + std::to_string(l) + " [" + std::to_string(shared_[l].in) + "] -> ["
                        + std::to_string(shared_[l].out) + "]");
        feat = shared_[l].out;
    }
    for (std::size_t hd = 0; hd < heads_.size(); ++hd) {
        std::string s = "head" + std::to_string(hd) + " [" + std::to_string(feat) + "]";
        for (const auto& d : heads_[hd])
            s += " -> [" + std::to_string(d.out) + "]";
        lines.push_back(s);
    }
    return lines;
}

NetworkParams Network::init_params(Rng& rng) const
{
    NetworkParams p = layout_;
    auto fill = [&](std::size_t off, std::size_t n, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < n; ++i)
            p.values[off + i] = u(rng);
    };
    // He-uniform for layers feeding a ReLU, zero bias.
    auto relu_conv = [&](const Conv2d& c) {
        const double fan = static_cast<double>(c.in_c * c.kernel * c.kernel);
        fill(c.w_off, static_cast<std::size_t>(c.out_c * c.in_c * c.kernel * c.kernel), std::sqrt(6.0 / fan));
    };
    auto relu_dense = [&](const Dense& d) {
        fill(d.w_off, static_cast<std::size_t>(d.in * d.out), std::sqrt(6.0 / d.in));
    };
    // Fan-in uniform for the attention gates.
    auto plain_conv = [&](const Conv2d& c) {
        const double b = 1.0 / std::sqrt(static_cast<double>(c.in_c * c.kernel * c.kernel));
        fill(c.w_off, static_cast<std::size_t>(c.out_c * c.in_c * c.kernel * c.kernel), b);
        fill(c.b_off, static_cast<std::size_t>(c.out_c), b);
    };
    auto plain_dense = [&](const Dense& d) {
        const double b = 1.0 / std::sqrt(static_cast<double>(d.in));
        fill(d.w_off, static_cast<std::size_t>(d.in * d.out), b);
        fill(d.b_off, static_cast<std::size_t>(d.out), b);
    };
    for (const auto& br : branch_convs_)
        for (const auto& c : br)
            relu_conv(c);
    for (const auto& c : fusion_convs_)
        relu_conv(c);
    if (spec_.attention) {
        plain_dense(channel_att_.squeeze);
        plain_dense(channel_att_.excite);
        plain_conv(spatial_att_.conv);
    }
    for (const auto& d : shared_)
        relu_dense(d);
    // Output layers start near zero so that heads begin unsaturated.
    for (const auto& hd : heads_)
        for (std::size_t i = 0; i < hd.size(); ++i) {
            if (i + 1 < hd.size()) {
                relu_dense(hd[i]);
            } else {
                fill(hd[i].w_off, static_cast<std::size_t>(hd[i].in * hd[i].out), 3e-3);
                fill(hd[i].b_off, static_cast<std::size_t>(hd[i].out), 3e-3);
            }
        }
    return p;
}

void Network::check_params(const NetworkParams& params) const
{
    if (!params.same_layout(layout_))
        throw ContractError("parameter layout does not match network spec '" + spec_.preset + "'");
}

Tensor Network::forward(const NetworkParams& params, const Tensor& state, const Tensor* action, Tape* tape) const
{
    check_params(params);
    if (state.shape.size() != 4 || state.dim(1) != static_cast<std::size_t>(spec_.branches)
        || state.dim(2) != static_cast<std::size_t>(spec_.height)
        || state.dim(3) != static_cast<std::size_t>(spec_.width))
        throw ContractError("network input: expected state of shape [B," + std::to_string(spec_.branches) + ","
                            + std::to_string(spec_.height) + "," + std::to_string(spec_.width) + "]");
    const std::size_t b = state.dim(0);
    if (spec_.action_inputs > 0) {
        if (!action || action->size() != b * static_cast<std::size_t>(spec_.action_inputs))
            throw ContractError("network input: critic expects an action of width "
                                + std::to_string(spec_.action_inputs));
    }

    Tape local;
    Tape& t = tape ? *tape : local;
    t = Tape{};
    t.owner = this;
    t.params = &params;
    t.version = params.version;
    t.batch = b;
    const std::span<const double> pv(params.values);

    const std::size_t hw = static_cast<std::size_t>(spec_.height * spec_.width);
    t.branch_in.resize(branch_convs_.size());
    t.branch_out.resize(branch_convs_.size());
    for (std::size_t br = 0; br < branch_convs_.size(); ++br) {
        Tensor x({b, 1, static_cast<std::size_t>(spec_.height), static_cast<std::size_t>(spec_.width)});
        for (std::size_t s = 0; s < b; ++s)
            std::memcpy(x.data.data() + s * hw, state.data.data() + (s * branch_convs_.size() + br) * hw,
                        hw * sizeof(double));
        for (const auto& c : branch_convs_[br]) {
            Tensor y;
            conv2d_forward(c, pv, x, y);
            relu_inplace(y);
            t.branch_in[br].push_back(std::move(x));
            x = std::move(y);
        }
        t.branch_out[br] = std::move(x);
    }

    // Concatenate branch features along channels.
    const auto& first = t.branch_out.front();
    const std::size_t bc = first.dim(1), fh = first.dim(2), fw = first.dim(3), fhw = fh * fw;
    const std::size_t nb = branch_convs_.size();
    Tensor x({b, bc * nb, fh, fw});
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t br = 0; br < nb; ++br)
            std::memcpy(x.data.data() + (s * nb + br) * bc * fhw, t.branch_out[br].data.data() + s * bc * fhw,
                        bc * fhw * sizeof(double));
    for (const auto& c : fusion_convs_) {
        Tensor y;
        conv2d_forward(c, pv, x, y);
        relu_inplace(y);
        t.fusion_in.push_back(std::move(x));
        x = std::move(y);
    }
    t.fused = std::move(x);

    const Tensor* feat_map = &t.fused;
    if (spec_.attention) {
        channel_attention_forward(channel_att_, pv, t.fused, t);
        spatial_attention_forward(spatial_att_, pv, t.ca_out, t);
        feat_map = &t.att_out;
    }

    const std::size_t c = static_cast<std::size_t>(fused_channels_);
    const std::size_t a = static_cast<std::size_t>(spec_.action_inputs);
    const std::size_t phw = feat_map->dim(2) * feat_map->dim(3);
    t.joined = Tensor({b, c + a});
    for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* px = feat_map->data.data() + (s * c + ch) * phw;
            double sum = 0.0;
            for (std::size_t q = 0; q < phw; ++q)
                sum += px[q];
            t.joined.data[s * (c + a) + ch] = sum / static_cast<double>(phw);
        }
        for (std::size_t k = 0; k < a; ++k)
            t.joined.data[s * (c + a) + c + k] = action->data[s * a + k];
    }

    const Tensor* h = &t.joined;
    for (const auto& d : shared_) {
        Tensor y;
        dense_forward(d, pv, *h, y);
        relu_inplace(y);
        t.shared_acts.push_back(std::move(y));
        h = &t.shared_acts.back();
    }
    const std::size_t nh = heads_.size();
    t.out = Tensor({b, nh});
    t.head_acts.resize(nh);
    for (std::size_t hd = 0; hd < nh; ++hd) {
        const Tensor* hx = h;
        for (std::size_t l = 0; l + 1 < heads_[hd].size(); ++l) {
            Tensor y;
            dense_forward(heads_[hd][l], pv, *hx, y);
            relu_inplace(y);
            t.head_acts[hd].push_back(std::move(y));
            hx = &t.head_acts[hd].back();
        }
        Tensor y;
        dense_forward(heads_[hd].back(), pv, *hx, y);
        for (std::size_t s = 0; s < b; ++s) {
            const double z = y.data[s];
            t.out.data[s * nh + hd] = spec_.head_activation == HeadActivation::Tanh ? std::tanh(z) : z;
        }
    }
    return t.out;
}

Gradients Network::backward(const NetworkParams& params, const Tape& t, const Tensor& dout,
                            const BackwardOptions& opts) const
{
    if (t.owner != this || t.params != &params || t.version != params.version)
        throw ContractError("stale tape: parameters changed since the forward pass");
    const std::size_t b = t.batch, nh = heads_.size();
    if (dout.size() != b * nh)
        throw ContractError("backward: upstream gradient must have shape [B," + std::to_string(nh) + "]");
    const std::span<const double> pv(params.values);

    Gradients g;
    if (opts.param_grads)
        g.params.assign(params.values.size(), 0.0);
    std::span<double> gp(g.params);

    const Tensor& top = t.shared_acts.empty() ? t.joined : t.shared_acts.back();
    Tensor dtop(top.shape);
    for (std::size_t hd = 0; hd < nh; ++hd) {
        Tensor dz({b, 1});
        for (std::size_t s = 0; s < b; ++s) {
            const double o = t.out.data[s * nh + hd];
            const double d = dout.data[s * nh + hd];
            dz.data[s] = spec_.head_activation == HeadActivation::Tanh ? d * (1.0 - o * o) : d;
        }
        const auto& layers = heads_[hd];
        for (std::size_t l = layers.size(); l-- > 0;) {
            const Tensor& in = l == 0 ? top : t.head_acts[hd][l - 1];
            Tensor dx;
            dense_backward(layers[l], pv, in, dz, gp, &dx);
            if (l > 0) {
                relu_mask(t.head_acts[hd][l - 1], dx);
                dz = std::move(dx);
            } else {
                for (std::size_t i = 0; i < dtop.size(); ++i)
                    dtop.data[i] += dx.data[i];
            }
        }
    }

    Tensor dh = std::move(dtop);
    for (std::size_t l = shared_.size(); l-- > 0;) {
        relu_mask(t.shared_acts[l], dh);
        const Tensor& in = l == 0 ? t.joined : t.shared_acts[l - 1];
        Tensor dx;
        dense_backward(shared_[l], pv, in, dh, gp, &dx);
        dh = std::move(dx);
    }

    const std::size_t c = static_cast<std::size_t>(fused_channels_);
    const std::size_t a = static_cast<std::size_t>(spec_.action_inputs);
    if (a > 0) {
        g.action = Tensor({b, a});
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t k = 0; k < a; ++k)
                g.action.data[s * a + k] = dh.data[s * (c + a) + c + k];
    }
    if (opts.action_only)
        return g;

    const Tensor& fmap = spec_.attention ? t.att_out : t.fused;
    const std::size_t phw = fmap.dim(2) * fmap.dim(3);
    Tensor dmap(fmap.shape);
    for (std::size_t s = 0; s < b; ++s)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double d = dh.data[s * (c + a) + ch] / static_cast<double>(phw);
            double* dst = dmap.data.data() + (s * c + ch) * phw;
            for (std::size_t q = 0; q < phw; ++q)
                dst[q] = d;
        }
    if (spec_.attention) {
        Tensor dca = spatial_attention_backward(spatial_att_, pv, t.ca_out, t, dmap, gp);
        dmap = channel_attention_backward(channel_att_, pv, t.fused, t, dca, gp);
    }

    Tensor dx = std::move(dmap);
    for (std::size_t l = fusion_convs_.size(); l-- > 0;) {
        const Tensor& act = l + 1 == fusion_convs_.size() ? t.fused : t.fusion_in[l + 1];
        relu_mask(act, dx);
        Tensor dprev;
        conv2d_backward(fusion_convs_[l], pv, t.fusion_in[l], dx, gp, &dprev);
        dx = std::move(dprev);
    }

    const std::size_t nb = branch_convs_.size();
    const auto& first = t.branch_out.front();
    const std::size_t bc = first.dim(1), fhw = first.dim(2) * first.dim(3);
    const std::size_t hw = static_cast<std::size_t>(spec_.height * spec_.width);
    if (opts.input_grad)
        g.input = Tensor({b, nb, static_cast<std::size_t>(spec_.height), static_cast<std::size_t>(spec_.width)});
    for (std::size_t br = 0; br < nb; ++br) {
        Tensor d(first.shape);
        for (std::size_t s = 0; s < b; ++s)
            std::memcpy(d.data.data() + s * bc * fhw, dx.data.data() + (s * nb + br) * bc * fhw,
                        bc * fhw * sizeof(double));
        const auto& convs = branch_convs_[br];
        for (std::size_t l = convs.size(); l-- > 0;) {
            const Tensor& act = l + 1 == convs.size() ? t.branch_out[br] : t.branch_in[br][l + 1];
            relu_mask(act, d);
            const bool need_dx = l > 0 || opts.input_grad;
            Tensor dprev;
            conv2d_backward(convs[l], pv, t.branch_in[br][l], d, gp, need_dx ? &dprev : nullptr);
            d = std::move(dprev);
        }
        if (opts.input_grad)
            for (std::size_t s = 0; s < b; ++s)
                std::memcpy(g.input.data.data() + (s * nb + br) * hw, d.data.data() + s * hw, hw * sizeof(double));
    }
    return g;
}

void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& st)
{
    if (grads.size() != params.values.size() || st.m.size() != params.values.size())
        throw ContractError("adam_step: gradient, moment and parameter sizes differ");
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double gi = grads[i];
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * gi;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * gi * gi;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        params.values[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
    ++params.version;
}

void soft_update(NetworkParams& target, const NetworkParams& online, double tau)
{
    if (!target.same_layout(online))
        throw ContractError("soft_update: target and online layouts differ");
    for (std::size_t i = 0; i < target.values.size(); ++i)
        target.values[i] = tau * online.values[i] + (1.0 - tau) * target.values[i];
    ++target.version;
}

double gradient_check(const Network& net, const NetworkParams& params, const Tensor& state, const Tensor* action,
                      double eps, Rng& rng)
{
    NetworkParams p = params;
    Tape tape;
    const Tensor out = net.forward(p, state, action, &tape);
    std::normal_distribution<double> nd(0.0, 1.0);
    Tensor weights(out.shape);
    for (auto& v : weights.data)
        v = nd(rng);
    const Gradients g = net.backward(p, tape, weights, {true, false, false});

    auto loss = [&](const NetworkParams& q, const Tensor* act) {
        const Tensor o = net.forward(q, state, act, nullptr);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i)
            s += o.data[i] * weights.data[i];
        return s;
    };
    auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };

    double worst = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double orig = p.values[i];
        p.values[i] = orig + eps;
        const double up = loss(p, action);
        p.values[i] = orig - eps;
        const double down = loss(p, action);
        p.values[i] = orig;
        worst = std::max(worst, rel(g.params[i], (up - down) / (2.0 * eps)));
    }
    if (action) {
        Tensor a = *action;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double orig = a.data[i];
            a.data[i] = orig + eps;
            const double up = loss(p, &a);
            a.data[i] = orig - eps;
            const double down = loss(p, &a);
            a.data[i] = orig;
            worst = std::max(worst, rel(g.action.data[i], (up - down) / (2.0 * eps)));
        }
    }
    return worst;
}

// ---- checkpoints ----

std::string checkpoint_to_bytes(const Checkpoint& ckpt)
{
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
    for (const auto& [k, v] : ckpt.meta) {
        put_str(out, k);
        put_str(out, v);
    }
    put_u32(out, static_cast<std::uint32_t>(ckpt.nets.size()));
    for (const auto& [name, net] : ckpt.nets) {
        put_str(out, name);
        put_u32(out, static_cast<std::uint32_t>(net.blocks.size()));
        for (const auto& blk : net.blocks) {
            put_str(out, blk.name);
            put_u32(out, static_cast<std::uint32_t>(blk.shape.size()));
            for (auto d : blk.shape)
                put_u64(out, d);
        }
        put_u64(out, net.values.size());
        for (double v : net.values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            put_u64(out, bits);
        }
    }
    return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes)
{
    if (bytes.size() < sizeof kMagic || bytes.compare(0, sizeof kMagic, kMagic, sizeof kMagic) != 0)
        throw FormatError("not a checkpoint file (bad magic)");
    Reader r(bytes, sizeof kMagic);
    const auto version = r.uint(4);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    const auto nmeta = r.uint(4);
    for (std::uint64_t i = 0; i < nmeta; ++i) {
        std::string k = r.str();
        ckpt.meta[k] = r.str();
    }
    const auto nnets = r.uint(4);
    for (std::uint64_t i = 0; i < nnets; ++i) {
        const std::string name = r.str();
        NetworkParams p;
        const auto nblocks = r.uint(4);
        std::size_t offset = 0;
        for (std::uint64_t bI = 0; bI < nblocks; ++bI) {
            ParamBlock blk;
            blk.name = r.str();
            const auto rank = r.uint(4);
            for (std::uint64_t d = 0; d < rank; ++d)
                blk.shape.push_back(static_cast<std::size_t>(r.uint(8)));
            blk.offset = offset;
            blk.size = shape_product(blk.shape);
            offset += blk.size;
            p.blocks.push_back(std::move(blk));
        }
        const auto count = r.uint(8);
        if (count != offset)
            throw FormatError("checkpoint network '" + name + "': value count disagrees with layer table");
        p.values.resize(static_cast<std::size_t>(count));
        for (auto& v : p.values)
            v = r.f64();
        ckpt.nets[name] = std::move(p);
    }
    if (!r.done())
        throw FormatError("checkpoint has trailing bytes");
    return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    const std::string bytes = checkpoint_to_bytes(ckpt);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw IoError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return checkpoint_from_bytes(ss.str());
}

} // namespace uavdt::nn
