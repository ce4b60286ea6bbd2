#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <vector>

#include "lckasr/tensor.hpp"

namespace lckasr {

// Stride is always 1 in this architecture; only kernel, dilation, padding and
// grouping vary.
struct ConvGeometry {
    int kernel_h = 1, kernel_w = 1;
    int dilation_h = 1, dilation_w = 1;
    int pad_h = 0, pad_w = 0;
    int groups = 1;
    bool has_bias = true;
};

// "same" spatial padding for an odd kernel.
constexpr int same_pad(int kernel, int dilation) { return dilation * (kernel - 1) / 2; }

inline ConvGeometry pointwise_geom(bool bias = true) {
    ConvGeometry g;
    g.has_bias = bias;
    return g;
}

inline ConvGeometry depthwise_geom(int channels, int kh, int kw, int dil_h, int dil_w,
                                   bool bias = true) {
    ConvGeometry g;
    g.kernel_h = kh;
    g.kernel_w = kw;
    g.dilation_h = dil_h;
    g.dilation_w = dil_w;
    g.pad_h = same_pad(kh, dil_h);
    g.pad_w = same_pad(kw, dil_w);
    g.groups = channels;
    g.has_bias = bias;
    return g;
}

inline ConvGeometry standard_geom(int kh, int kw, bool bias = true) {
    ConvGeometry g;
    g.kernel_h = kh;
    g.kernel_w = kw;
    g.pad_h = same_pad(kh, 1);
    g.pad_w = same_pad(kw, 1);
    g.has_bias = bias;
    return g;
}

// Multiply-accumulate instrumentation. When enabled, conv2d switches to a
// fully naive loop that bumps the counter once per kernel tap visit, padded
// positions included, which is the same convention the analyzer formula uses.
namespace macs {

inline std::atomic<bool>& counting_flag() {
    static std::atomic<bool> f{false};
    return f;
}

inline std::atomic<std::uint64_t>& counter() {
    static std::atomic<std::uint64_t> c{0};
    return c;
}

inline void reset() { counter().store(0); }
inline void enable(bool on) { counting_flag().store(on); }
inline std::uint64_t value() { return counter().load(); }

}  // namespace macs

namespace detail {

struct ConvDims {
    int out_c, out_h, out_w, in_cg, out_cg;
};

template <typename T>
ConvDims conv_check(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                    const ConvGeometry& g) {
    if (g.kernel_h < 1 || g.kernel_w < 1 || g.dilation_h < 1 || g.dilation_w < 1 ||
        g.pad_h < 0 || g.pad_w < 0 || g.groups < 1)
        throw ConfigError("conv2d: geometry fields must be positive (padding non-negative)");
    if (x.c() % g.groups != 0)
        throw ConfigError("conv2d: input channels " + std::to_string(x.c()) +
                          " not divisible by groups " + std::to_string(g.groups));
    if (w.n() % g.groups != 0)
        throw ConfigError("conv2d: output channels " + std::to_string(w.n()) +
                          " not divisible by groups " + std::to_string(g.groups));
    if (w.c() != x.c() / g.groups)
        throw ConfigError("conv2d: weight input-channel extent " + std::to_string(w.c()) +
                          " does not match input channels per group " +
                          std::to_string(x.c() / g.groups));
    if (w.h() != g.kernel_h || w.w() != g.kernel_w)
        throw ConfigError("conv2d: weight kernel " + std::to_string(w.h()) + "x" +
                          std::to_string(w.w()) + " does not match geometry kernel " +
                          std::to_string(g.kernel_h) + "x" + std::to_string(g.kernel_w));
    if (bias && static_cast<int>(bias->size()) != w.n())
        throw ConfigError("conv2d: bias length " + std::to_string(bias->size()) +
                          " does not match output channels " + std::to_string(w.n()));
    const int out_h = x.h() + 2 * g.pad_h - g.dilation_h * (g.kernel_h - 1);
    const int out_w = x.w() + 2 * g.pad_w - g.dilation_w * (g.kernel_w - 1);
    if (out_h < 1 || out_w < 1)
        throw ConfigError("conv2d: kernel support exceeds padded input, output would be " +
                          std::to_string(out_h) + "x" + std::to_string(out_w));
    return ConvDims{w.n(), out_h, out_w, x.c() / g.groups, w.n() / g.groups};
}

}  // namespace detail

// 2-D cross-correlation (no kernel flip), zero padding, stride 1, grouped and
// dilated. Weight layout (out_c, in_c/groups, kH, kW). The instrumented naive
// path accumulates in 64-bit and is the reference the vectorizable default is
// tested against.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w,
                  const TensorT<std::type_identity_t<T>>* bias, const ConvGeometry& g) {
    const auto d = detail::conv_check(x, w, bias, g);
    TensorT<T> out(x.n(), d.out_c, d.out_h, d.out_w);

    if (macs::counting_flag().load()) {
        // Instrumented naive path: every tap of every output element is visited.
        std::uint64_t taps = 0;
        for (int n = 0; n < x.n(); ++n)
            for (int oc = 0; oc < d.out_c; ++oc) {
                const int ic0 = (oc / d.out_cg) * d.in_cg;
                for (int oh = 0; oh < d.out_h; ++oh)
                    for (int ow = 0; ow < d.out_w; ++ow) {
                        double acc = bias ? double((*bias)[oc]) : 0.0;
                        for (int ici = 0; ici < d.in_cg; ++ici)
                            for (int kh = 0; kh < g.kernel_h; ++kh)
                                for (int kw = 0; kw < g.kernel_w; ++kw) {
                                    ++taps;
                                    const int ih = oh - g.pad_h + kh * g.dilation_h;
                                    const int iw = ow - g.pad_w + kw * g.dilation_w;
                                    if (ih < 0 || ih >= x.h() || iw < 0 || iw >= x.w()) continue;
                                    acc += double(x.at(n, ic0 + ici, ih, iw)) *
                                           double(w.at(oc, ici, kh, kw));
                                }
                        out.at(n, oc, oh, ow) = T(acc);
                    }
            }
        macs::counter().fetch_add(taps);
        return out;
    }

    const std::int64_t jobs = std::int64_t(x.n()) * d.out_c;
    const bool is_1x1 = g.kernel_h == 1 && g.kernel_w == 1 && g.pad_h == 0 && g.pad_w == 0;

    if (is_1x1) {
        const std::size_t hw = std::size_t(x.h()) * x.w();
#pragma omp parallel for num_threads(worker_count()) schedule(static)
        for (std::int64_t job = 0; job < jobs; ++job) {
            const int n = int(job / d.out_c);
            const int oc = int(job % d.out_c);
            const int ic0 = (oc / d.out_cg) * d.in_cg;
            T* op = out.data() + out.offset(n, oc, 0, 0);
            const T bv = bias ? (*bias)[oc] : T(0);
            for (std::size_t i = 0; i < hw; ++i) op[i] = bv;
            for (int ici = 0; ici < d.in_cg; ++ici) {
                const T* xp = x.data() + x.offset(n, ic0 + ici, 0, 0);
                const T wv = w.at(oc, ici, 0, 0);
                for (std::size_t i = 0; i < hw; ++i) op[i] += wv * xp[i];
            }
        }
        return out;
    }

    // Shifted-row accumulation: for each kernel tap, the contribution to an
    // output row is the weighted input row shifted by kw*dil - pad, so the
    // inner loops stay unit-stride for any dilation.
#pragma omp parallel for num_threads(worker_count()) schedule(static)
    for (std::int64_t job = 0; job < jobs; ++job) {
        const int n = int(job / d.out_c);
        const int oc = int(job % d.out_c);
        const int ic0 = (oc / d.out_cg) * d.in_cg;
        const T bv = bias ? (*bias)[oc] : T(0);
        for (int oh = 0; oh < d.out_h; ++oh) {
            T* orow = out.data() + out.offset(n, oc, oh, 0);
            for (int ow = 0; ow < d.out_w; ++ow) orow[ow] = bv;
            for (int kh = 0; kh < g.kernel_h; ++kh) {
                const int ih = oh - g.pad_h + kh * g.dilation_h;
                if (ih < 0 || ih >= x.h()) continue;
                for (int ici = 0; ici < d.in_cg; ++ici) {
                    const T* xrow = x.data() + x.offset(n, ic0 + ici, ih, 0);
                    const T* wrow = w.data() + w.offset(oc, ici, kh, 0);
                    for (int kw = 0; kw < g.kernel_w; ++kw) {
                        const int shift = kw * g.dilation_w - g.pad_w;
                        const int lo = std::max(0, -shift);
                        const int hi = std::min(d.out_w - 1, x.w() - 1 - shift);
                        const T wv = wrow[kw];
                        const T* xs = xrow + shift;
                        for (int ow = lo; ow <= hi; ++ow) orow[ow] += wv * xs[ow];
                    }
                }
            }
        }
    }
    return out;
}

// x * Phi(x) with Phi the standard normal CDF.
template <typename T>
TensorT<T> gelu(const TensorT<T>& x) {
    TensorT<T> out(x.shape());
    const std::size_t total = x.size();
    for (std::size_t i = 0; i < total; ++i) {
        const double v = double(x[i]);
        out[i] = T(v * 0.5 * std::erfc(-v * M_SQRT1_2));
    }
    return out;
}

// out(n, c, h*r+i, w*r+j) = in(n, c*r^2 + i*r + j, h, w)
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int r) {
    if (r < 1) throw ConfigError("pixel_shuffle: factor must be positive");
    if (x.c() % (r * r) != 0)
        throw ConfigError("pixel_shuffle: channels " + std::to_string(x.c()) +
                          " not divisible by r^2 = " + std::to_string(r * r));
    TensorT<T> out(x.n(), x.c() / (r * r), x.h() * r, x.w() * r);
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < out.c(); ++c)
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    const int ic = c * r * r + i * r + j;
                    for (int h = 0; h < x.h(); ++h) {
                        const T* src = x.data() + x.offset(n, ic, h, 0);
                        T* dst = out.data() + out.offset(n, c, h * r + i, j);
                        for (int w = 0; w < x.w(); ++w) dst[std::size_t(w) * r] = src[w];
                    }
                }
    return out;
}

// Inverse of pixel_shuffle.
template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x, int r) {
    if (r < 1) throw ConfigError("pixel_unshuffle: factor must be positive");
    if (x.h() % r != 0 || x.w() % r != 0)
        throw ConfigError("pixel_unshuffle: spatial size not divisible by factor");
    TensorT<T> out(x.n(), x.c() * r * r, x.h() / r, x.w() / r);
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    const int oc = c * r * r + i * r + j;
                    for (int h = 0; h < out.h(); ++h)
                        for (int w = 0; w < out.w(); ++w)
                            out.at(n, oc, h, w) = x.at(n, c, h * r + i, w * r + j);
                }
    return out;
}

// Channel range copy; channel_split is built from it.
template <typename T>
TensorT<T> narrow_channels(const TensorT<T>& x, int c0, int len) {
    if (c0 < 0 || len < 1 || c0 + len > x.c())
        throw ConfigError("narrow_channels: range [" + std::to_string(c0) + "," +
                          std::to_string(c0 + len) + ") outside " + std::to_string(x.c()) +
                          " channels");
    TensorT<T> out(x.n(), len, x.h(), x.w());
    const std::size_t plane = std::size_t(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n)
        std::copy_n(x.data() + x.offset(n, c0, 0, 0), plane * len,
                    out.data() + out.offset(n, 0, 0, 0));
    return out;
}

template <typename T>
std::vector<TensorT<T>> channel_split(const TensorT<T>& x, const std::vector<int>& parts) {
    int sum = 0;
    for (int p : parts) {
        if (p < 1) throw ConfigError("channel_split: parts must be positive");
        sum += p;
    }
    if (sum != x.c())
        throw ConfigError("channel_split: parts sum " + std::to_string(sum) +
                          " does not match channels " + std::to_string(x.c()));
    std::vector<TensorT<T>> out;
    out.reserve(parts.size());
    int c0 = 0;
    for (int p : parts) {
        out.push_back(narrow_channels(x, c0, p));
        c0 += p;
    }
    return out;
}

template <typename T>
TensorT<T> channel_concat(const std::vector<TensorT<T>>& xs) {
    if (xs.empty()) throw ConfigError("channel_concat: no inputs");
    int total_c = 0;
    for (const auto& t : xs) {
        if (t.n() != xs[0].n() || t.h() != xs[0].h() || t.w() != xs[0].w())
            throw ConfigError("channel_concat: spatial/batch mismatch, " + t.shape().str() +
                              " vs " + xs[0].shape().str());
        total_c += t.c();
    }
    TensorT<T> out(xs[0].n(), total_c, xs[0].h(), xs[0].w());
    const std::size_t plane = std::size_t(out.h()) * out.w();
    for (int n = 0; n < out.n(); ++n) {
        int c0 = 0;
        for (const auto& t : xs) {
            std::copy_n(t.data() + t.offset(n, 0, 0, 0), plane * t.c(),
                        out.data() + out.offset(n, c0, 0, 0));
            c0 += t.c();
        }
    }
    return out;
}

template <typename T>
TensorT<T> ewise_add(const TensorT<T>& a, const TensorT<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ConfigError("ewise_add: shape mismatch " + a.shape().str() + " vs " +
                          b.shape().str());
    TensorT<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename T>
TensorT<T> ewise_mul(const TensorT<T>& a, const TensorT<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ConfigError("ewise_mul: shape mismatch " + a.shape().str() + " vs " +
                          b.shape().str());
    TensorT<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

// Stack n copies of the input along the channel dimension.
template <typename T>
TensorT<T> replicate_channels(const TensorT<T>& x, int n) {
    if (n < 1) throw ConfigError("replicate_channels: count must be positive");
    std::vector<TensorT<T>> copies(std::size_t(n), x);
    return channel_concat(copies);
}

template <typename T>
T mean_value(const TensorT<T>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += double(x[i]);
    return T(acc / double(x.size()));
}

// Mean absolute error over every element.
template <typename T>
T l1_loss_value(const TensorT<T>& pred, const TensorT<T>& target) {
    if (!(pred.shape() == target.shape()))
        throw ConfigError("l1_loss: shape mismatch " + pred.shape().str() + " vs " +
                          target.shape().str());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::abs(double(pred[i]) - double(target[i]));
    return T(acc / double(pred.size()));
}

}  // namespace lckasr
