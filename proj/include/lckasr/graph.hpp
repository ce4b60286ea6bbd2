#pragma once

// The network is defined once as a template over a context. Three contexts
// instantiate it: ShapeCtx enumerates parameters and layer costs without
// touching data, EagerCtx runs inference, TapeCtx records the training graph.
// Keeping a single definition makes the parameter store, the forward pass and
// the complexity analyzer agree by construction.

#include <string>
#include <vector>

#include "lckasr/autodiff.hpp"
#include "lckasr/config.hpp"
#include "lckasr/ops.hpp"
#include "lckasr/param_store.hpp"
#include "lckasr/tensor.hpp"

namespace lckasr {

// --- context implementations ------------------------------------------------

struct LayerRow {
    std::string name;
    std::string kind;
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
};

struct ParamRecord {
    std::string name;
    std::vector<std::uint32_t> dims;
    Shape4 shape;
    int fan_in = 1;
};

inline std::uint64_t conv_param_count(int in_c, int out_c, const ConvGeometry& g) {
    std::uint64_t p = std::uint64_t(out_c) * (in_c / g.groups) * g.kernel_h * g.kernel_w;
    if (g.has_bias) p += std::uint64_t(out_c);
    return p;
}

inline std::uint64_t conv_mac_count(int in_c, int out_c, const ConvGeometry& g, int out_h,
                                    int out_w) {
    return std::uint64_t(out_h) * out_w * out_c * (in_c / g.groups) * g.kernel_h * g.kernel_w;
}

// Walks the graph tracking shapes only; collects the ordered parameter list
// and one cost row per convolution.
class ShapeCtx {
public:
    using Value = Shape4;

    Value conv(const Value& x, const std::string& name, int out_c, const ConvGeometry& g) {
        if (x.c % g.groups != 0 || out_c % g.groups != 0)
            throw ConfigError("layer '" + name + "': groups " + std::to_string(g.groups) +
                              " do not divide channels " + std::to_string(x.c) + "->" +
                              std::to_string(out_c));
        const int in_cg = x.c / g.groups;
        const int out_h = x.h + 2 * g.pad_h - g.dilation_h * (g.kernel_h - 1);
        const int out_w = x.w + 2 * g.pad_w - g.dilation_w * (g.kernel_w - 1);
        if (out_h < 1 || out_w < 1)
            throw ConfigError("layer '" + name + "': kernel support exceeds input");

        rows.push_back(LayerRow{name, kind_of(x.c, out_c, g), conv_param_count(x.c, out_c, g),
                                conv_mac_count(x.c, out_c, g, out_h, out_w)});
        const int fan_in = in_cg * g.kernel_h * g.kernel_w;
        params.push_back(ParamRecord{
            name + ".weight",
            {std::uint32_t(out_c), std::uint32_t(in_cg), std::uint32_t(g.kernel_h),
             std::uint32_t(g.kernel_w)},
            Shape4{out_c, in_cg, g.kernel_h, g.kernel_w},
            fan_in});
        if (g.has_bias)
            params.push_back(ParamRecord{
                name + ".bias", {std::uint32_t(out_c)}, Shape4{1, out_c, 1, 1}, fan_in});
        return Shape4{x.n, out_c, out_h, out_w};
    }

    Value gelu(const Value& x) { return x; }
    Value pixel_shuffle(const Value& x, int r) {
        if (x.c % (r * r) != 0)
            throw ConfigError("pixel_shuffle: channels " + std::to_string(x.c) +
                              " not divisible by r^2 = " + std::to_string(r * r));
        return Shape4{x.n, x.c / (r * r), x.h * r, x.w * r};
    }
    std::vector<Value> split(const Value& x, const std::vector<int>& parts) {
        std::vector<Value> out;
        for (int p : parts) out.push_back(Shape4{x.n, p, x.h, x.w});
        return out;
    }
    Value concat(const std::vector<Value>& xs) {
        Shape4 s = xs.front();
        s.c = 0;
        for (const auto& x : xs) s.c += x.c;
        return s;
    }
    Value add(const Value& a, const Value&) { return a; }
    Value mul(const Value& a, const Value&) { return a; }
    Value replicate(const Value& x, int n) { return Shape4{x.n, x.c * n, x.h, x.w}; }
    int channels(const Value& x) const { return x.c; }

    std::vector<LayerRow> rows;
    std::vector<ParamRecord> params;

private:
    static std::string kind_of(int in_c, int out_c, const ConvGeometry& g) {
        std::string k = (g.groups == in_c && g.groups == out_c) ? "dw" : "conv";
        k += std::to_string(g.kernel_h) + "x" + std::to_string(g.kernel_w);
        if (g.dilation_h > 1 || g.dilation_w > 1)
            k += "d" + std::to_string(std::max(g.dilation_h, g.dilation_w));
        return k;
    }
};

// Direct evaluation against a parameter store.
class EagerCtx {
public:
    using Value = Tensor;

    explicit EagerCtx(const ParamStore& store) : store_(store) {}

    Value conv(const Value& x, const std::string& name, int, const ConvGeometry& g) {
        const Tensor& w = store_.tensor(name + ".weight");
        const Tensor* b = g.has_bias ? &store_.tensor(name + ".bias") : nullptr;
        return conv2d(x, w, b, g);
    }
    Value gelu(const Value& x) { return lckasr::gelu(x); }
    Value pixel_shuffle(const Value& x, int r) { return lckasr::pixel_shuffle(x, r); }
    std::vector<Value> split(const Value& x, const std::vector<int>& parts) {
        return channel_split(x, parts);
    }
    Value concat(const std::vector<Value>& xs) { return channel_concat(xs); }
    Value add(const Value& a, const Value& b) { return ewise_add(a, b); }
    Value mul(const Value& a, const Value& b) { return ewise_mul(a, b); }
    Value replicate(const Value& x, int n) { return replicate_channels(x, n); }
    int channels(const Value& x) const { return x.c(); }

private:
    const ParamStore& store_;
};

// Records the graph on a tape. Every parameter becomes a leaf up front so
// unreached ones still get (zero) gradients.
class TapeCtx {
public:
    using Value = Tape::Id;

    TapeCtx(Tape& tape, const ParamStore& store) : tape_(tape) {
        for (const auto& e : store.entries()) {
            param_names_.push_back(e.name);
            param_ids_.push_back(tape_.leaf(e.tensor));
            index_.emplace(e.name, param_ids_.back());
        }
    }

    Value conv(const Value& x, const std::string& name, int, const ConvGeometry& g) {
        std::optional<Tape::Id> bias;
        if (g.has_bias) bias = lookup(name + ".bias");
        return tape_.conv2d(x, lookup(name + ".weight"), bias, g);
    }
    Value gelu(const Value& x) { return tape_.gelu(x); }
    Value pixel_shuffle(const Value& x, int r) { return tape_.pixel_shuffle(x, r); }
    std::vector<Value> split(const Value& x, const std::vector<int>& parts) {
        return tape_.channel_split(x, parts);
    }
    Value concat(const std::vector<Value>& xs) { return tape_.channel_concat(xs); }
    Value add(const Value& a, const Value& b) { return tape_.ewise_add(a, b); }
    Value mul(const Value& a, const Value& b) { return tape_.ewise_mul(a, b); }
    Value replicate(const Value& x, int n) { return tape_.replicate_channels(x, n); }
    int channels(const Value& x) const { return tape_.value(x).c(); }

    const std::vector<std::string>& param_names() const { return param_names_; }
    const std::vector<Tape::Id>& param_ids() const { return param_ids_; }

private:
    Tape::Id lookup(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return it->second;
    }

    Tape& tape_;
    std::vector<std::string> param_names_;
    std::vector<Tape::Id> param_ids_;
    std::unordered_map<std::string, Tape::Id> index_;
};

// --- block definitions --------------------------------------------------------

// Point-wise conv, 3-way channel split, depth-wise 1x1 / 3x3 / 5x5, concat.
// With use_mbsconv off this degrades to the plain blueprint block
// (point-wise + depth-wise 3x3) with the same channel signature.
template <class Ctx>
typename Ctx::Value mbsconv_block(Ctx& ctx, const typename Ctx::Value& x,
                                  const std::string& scope, int out_c, bool bias,
                                  bool use_mbsconv) {
    auto refined = ctx.conv(x, scope + ".pw", out_c, pointwise_geom(bias));
    if (!use_mbsconv)
        return ctx.conv(refined, scope + ".dw3", out_c, depthwise_geom(out_c, 3, 3, 1, 1, bias));

    if (out_c % 3 != 0)
        throw ConfigError("block '" + scope + "': C_out divisible by 3 is required for the "
                          "multi-scale split, got " + std::to_string(out_c));
    const int gc = out_c / 3;
    auto groups = ctx.split(refined, {gc, gc, gc});
    std::vector<typename Ctx::Value> outs;
    outs.push_back(ctx.conv(groups[0], scope + ".dw1", gc, depthwise_geom(gc, 1, 1, 1, 1, bias)));
    outs.push_back(ctx.conv(groups[1], scope + ".dw3", gc, depthwise_geom(gc, 3, 3, 1, 1, bias)));
    outs.push_back(ctx.conv(groups[2], scope + ".dw5", gc, depthwise_geom(gc, 5, 5, 1, 1, bias)));
    return ctx.concat(outs);
}

// Attention branch before the final element-wise product. Exposed separately
// for the receptive-field probe and the block tests.
template <class Ctx>
typename Ctx::Value attention_branch(Ctx& ctx, const typename Ctx::Value& x,
                                     const std::string& scope, const AttentionVariant& v,
                                     bool bias) {
    const int c = ctx.channels(x);
    const int k = v.base_kernel;
    const int d = v.dilation;
    typename Ctx::Value t = x;
    switch (v.kind) {
        case AttentionKind::None:
            return x;
        case AttentionKind::Lka:
            t = ctx.conv(t, scope + ".dw", c, depthwise_geom(c, k, k, 1, 1, bias));
            t = ctx.conv(t, scope + ".dwd", c, depthwise_geom(c, k, k, d, d, bias));
            break;
        case AttentionKind::Lska:
            // both local 1-D kernels first, then both dilated ones
            t = ctx.conv(t, scope + ".dwh", c, depthwise_geom(c, 1, k, 1, 1, bias));
            t = ctx.conv(t, scope + ".dwv", c, depthwise_geom(c, k, 1, 1, 1, bias));
            t = ctx.conv(t, scope + ".dwdh", c, depthwise_geom(c, 1, k, 1, d, bias));
            t = ctx.conv(t, scope + ".dwdv", c, depthwise_geom(c, k, 1, d, 1, bias));
            break;
        case AttentionKind::Lcka:
            // local and dilated kernels adjacent per direction, horizontal first
            t = ctx.conv(t, scope + ".dwh", c, depthwise_geom(c, 1, k, 1, 1, bias));
            t = ctx.conv(t, scope + ".dwdh", c, depthwise_geom(c, 1, k, 1, d, bias));
            t = ctx.conv(t, scope + ".dwv", c, depthwise_geom(c, k, 1, 1, 1, bias));
            t = ctx.conv(t, scope + ".dwdv", c, depthwise_geom(c, k, 1, d, 1, bias));
            break;
    }
    return ctx.conv(t, scope + ".pw", c, pointwise_geom(bias));
}

template <class Ctx>
typename Ctx::Value attention_block(Ctx& ctx, const typename Ctx::Value& x,
                                    const std::string& scope, const AttentionVariant& v,
                                    bool bias) {
    if (v.kind == AttentionKind::None) return x;
    return ctx.mul(attention_branch(ctx, x, scope, v, bias), x);
}

// Distillation trunk: three stages peel off a reduced-channel tensor while an
// MBSConv with a shallow residual refines the running feature; a fourth
// reduced branch, concat, fuse, activation, attention, projection, residual.
template <class Ctx>
typename Ctx::Value marb_block(Ctx& ctx, const typename Ctx::Value& x, const std::string& scope,
                               const ModelConfig& cfg) {
    const int c = ctx.channels(x);
    const int dc = c * cfg.distill_num / cfg.distill_den;

    std::vector<typename Ctx::Value> distilled;
    typename Ctx::Value feat = x;
    for (int stage = 1; stage <= 3; ++stage) {
        const std::string id = std::to_string(stage);
        distilled.push_back(
            ctx.conv(feat, scope + ".distill" + id, dc, pointwise_geom(cfg.bias)));
        auto refined = mbsconv_block(ctx, feat, scope + ".refine" + id, c, cfg.bias, cfg.mbsconv);
        feat = ctx.add(refined, feat);
    }
    distilled.push_back(mbsconv_block(ctx, feat, scope + ".distill4", dc, cfg.bias, cfg.mbsconv));

    auto fused = ctx.conv(ctx.concat(distilled), scope + ".fuse", c, pointwise_geom(cfg.bias));
    fused = ctx.gelu(fused);
    auto attended = attention_block(ctx, fused, scope + "." + attention_kind_name(cfg.attention.kind),
                                    cfg.attention, cfg.bias);
    auto projected = ctx.conv(attended, scope + ".proj", c, pointwise_geom(cfg.bias));
    return ctx.add(projected, x);
}

// Full network: replicated input, shallow block, M MARBs, fusion of all block
// outputs, long skip, reconstruction conv + sub-pixel upsampling.
template <class Ctx>
typename Ctx::Value lcan_graph(Ctx& ctx, const typename Ctx::Value& lr_input,
                               const ModelConfig& cfg) {
    auto x = ctx.replicate(lr_input, cfg.replication);
    auto f0 = mbsconv_block(ctx, x, "shallow", cfg.channels, cfg.bias, cfg.mbsconv);

    std::vector<typename Ctx::Value> block_outputs;
    auto feat = f0;
    for (int k = 0; k < cfg.blocks; ++k) {
        feat = marb_block(ctx, feat, "marb." + std::to_string(k), cfg);
        block_outputs.push_back(feat);
    }

    auto fused = ctx.conv(ctx.concat(block_outputs), "fusion.pw", cfg.channels,
                          pointwise_geom(cfg.bias));
    fused = ctx.gelu(fused);
    fused = mbsconv_block(ctx, fused, "fusion.smooth", cfg.channels, cfg.bias, cfg.mbsconv);

    auto skip = ctx.add(fused, f0);
    auto recon = ctx.conv(skip, "recon.conv", 3 * cfg.scale * cfg.scale,
                          standard_geom(3, 3, cfg.bias));
    return ctx.pixel_shuffle(recon, cfg.scale);
}

}  // namespace lckasr
