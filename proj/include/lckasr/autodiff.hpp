#pragma once

#include <optional>
#include <vector>

#include "lckasr/ops.hpp"
#include "lckasr/tensor.hpp"

namespace lckasr {

// Gradient w.r.t. the convolution input (gather form, deterministic under
// parallel execution because every output element is an independent sum).
template <typename T>
TensorT<T> conv2d_backward_input(const TensorT<T>& grad_out, const TensorT<T>& w,
                                 const ConvGeometry& g, const Shape4& in_shape) {
    TensorT<T> dx(in_shape);
    const int in_cg = in_shape.c / g.groups;
    const int out_cg = w.n() / g.groups;
    const std::int64_t jobs = std::int64_t(in_shape.n) * in_shape.c;

    if (g.kernel_h == 1 && g.kernel_w == 1 && g.pad_h == 0 && g.pad_w == 0) {
        const std::size_t hw = std::size_t(in_shape.h) * in_shape.w;
#pragma omp parallel for num_threads(worker_count()) schedule(static)
        for (std::int64_t job = 0; job < jobs; ++job) {
            const int n = int(job / in_shape.c);
            const int ic = int(job % in_shape.c);
            const int group = ic / in_cg;
            const int ici = ic % in_cg;
            T* dp = dx.data() + dx.offset(n, ic, 0, 0);
            for (int ocg = 0; ocg < out_cg; ++ocg) {
                const int oc = group * out_cg + ocg;
                const T* gp = grad_out.data() + grad_out.offset(n, oc, 0, 0);
                const T wv = w.at(oc, ici, 0, 0);
                for (std::size_t i = 0; i < hw; ++i) dp[i] += wv * gp[i];
            }
        }
        return dx;
    }

#pragma omp parallel for num_threads(worker_count()) schedule(static)
    for (std::int64_t job = 0; job < jobs; ++job) {
        const int n = int(job / in_shape.c);
        const int ic = int(job % in_shape.c);
        const int group = ic / in_cg;
        const int ici = ic % in_cg;
        for (int ih = 0; ih < in_shape.h; ++ih) {
            T* drow = dx.data() + dx.offset(n, ic, ih, 0);
            for (int kh = 0; kh < g.kernel_h; ++kh) {
                const int oh = ih + g.pad_h - kh * g.dilation_h;
                if (oh < 0 || oh >= grad_out.h()) continue;
                for (int ocg = 0; ocg < out_cg; ++ocg) {
                    const int oc = group * out_cg + ocg;
                    const T* grow = grad_out.data() + grad_out.offset(n, oc, oh, 0);
                    const T* wrow = w.data() + w.offset(oc, ici, kh, 0);
                    for (int kw = 0; kw < g.kernel_w; ++kw) {
                        const int shift = g.pad_w - kw * g.dilation_w;
                        const int lo = std::max(0, -shift);
                        const int hi = std::min(in_shape.w - 1, grad_out.w() - 1 - shift);
                        const T wv = wrow[kw];
                        const T* gs = grow + shift;
                        for (int iw = lo; iw <= hi; ++iw) drow[iw] += wv * gs[iw];
                    }
                }
            }
        }
    }
    return dx;
}

template <typename T>
TensorT<T> conv2d_backward_weight(const TensorT<T>& grad_out, const TensorT<T>& x,
                                  const ConvGeometry& g, const Shape4& w_shape) {
    TensorT<T> dw(w_shape);
    const int in_cg = w_shape.c;
    const int out_cg = w_shape.n / g.groups;

    if (g.kernel_h == 1 && g.kernel_w == 1 && g.pad_h == 0 && g.pad_w == 0) {
        const std::size_t hw = std::size_t(x.h()) * x.w();
#pragma omp parallel for num_threads(worker_count()) schedule(static)
        for (int oc = 0; oc < w_shape.n; ++oc) {
            const int ic0 = (oc / out_cg) * in_cg;
            for (int ici = 0; ici < in_cg; ++ici) {
                double acc = 0.0;
                for (int n = 0; n < x.n(); ++n) {
                    const T* gp = grad_out.data() + grad_out.offset(n, oc, 0, 0);
                    const T* xp = x.data() + x.offset(n, ic0 + ici, 0, 0);
                    T plane = T(0);
#pragma omp simd reduction(+ : plane)
                    for (std::size_t i = 0; i < hw; ++i) plane += gp[i] * xp[i];
                    acc += double(plane);
                }
                dw.at(oc, ici, 0, 0) = T(acc);
            }
        }
        return dw;
    }

#pragma omp parallel for num_threads(worker_count()) schedule(static)
    for (int oc = 0; oc < w_shape.n; ++oc) {
        const int ic0 = (oc / out_cg) * in_cg;
        for (int ici = 0; ici < in_cg; ++ici)
            for (int kh = 0; kh < g.kernel_h; ++kh)
                for (int kw = 0; kw < g.kernel_w; ++kw) {
                    // per-row dots in working precision, row sums in 64-bit
                    double acc = 0.0;
                    for (int n = 0; n < x.n(); ++n)
                        for (int oh = 0; oh < grad_out.h(); ++oh) {
                            const int ih = oh - g.pad_h + kh * g.dilation_h;
                            if (ih < 0 || ih >= x.h()) continue;
                            const T* grow = grad_out.data() + grad_out.offset(n, oc, oh, 0);
                            const T* xrow = x.data() + x.offset(n, ic0 + ici, ih, 0);
                            const int shift = kw * g.dilation_w - g.pad_w;
                            const int ow_lo = std::max(0, -shift);
                            const int ow_hi = std::min(grad_out.w() - 1, x.w() - 1 - shift);
                            const T* xs = xrow + shift;
                            T row = T(0);
#pragma omp simd reduction(+ : row)
                            for (int ow = ow_lo; ow <= ow_hi; ++ow) row += grow[ow] * xs[ow];
                            acc += double(row);
                        }
                    dw.at(oc, ici, kh, kw) = T(acc);
                }
    }
    return dw;
}

template <typename T>
TensorT<T> conv2d_backward_bias(const TensorT<T>& grad_out) {
    TensorT<T> db(1, grad_out.c(), 1, 1);
    for (int oc = 0; oc < grad_out.c(); ++oc) {
        double acc = 0.0;
        for (int n = 0; n < grad_out.n(); ++n) {
            const T* p = grad_out.data() + grad_out.offset(n, oc, 0, 0);
            const std::size_t hw = std::size_t(grad_out.h()) * grad_out.w();
            for (std::size_t i = 0; i < hw; ++i) acc += double(p[i]);
        }
        db.at(0, oc, 0, 0) = T(acc);
    }
    return db;
}

// Reverse-mode tape over the tensor kernels. Nodes are appended in evaluation
// order, so reverse id order is a valid topological order for backward.
template <typename T>
class TapeT {
public:
    using Id = int;

    Id leaf(TensorT<T> value) { return push(Op::Leaf, {}, std::move(value)); }

    Id conv2d(Id x, Id w, std::optional<Id> bias, const ConvGeometry& g) {
        const TensorT<T>* b = bias ? &value(*bias) : nullptr;
        TensorT<T> out = lckasr::conv2d(value(x), value(w), b, g);
        std::vector<Id> ins{x, w};
        if (bias) ins.push_back(*bias);
        Id id = push(Op::Conv2d, ins, std::move(out));
        nodes_[id].geom = g;
        return id;
    }

    Id gelu(Id x) { return push(Op::Gelu, {x}, lckasr::gelu(value(x))); }

    Id pixel_shuffle(Id x, int r) {
        Id id = push(Op::PixelShuffle, {x}, lckasr::pixel_shuffle(value(x), r));
        nodes_[id].arg0 = r;
        return id;
    }

    Id narrow_channels(Id x, int c0, int len) {
        Id id = push(Op::Narrow, {x}, lckasr::narrow_channels(value(x), c0, len));
        nodes_[id].arg0 = c0;
        nodes_[id].arg1 = len;
        return id;
    }

    std::vector<Id> channel_split(Id x, const std::vector<int>& parts) {
        int sum = 0;
        for (int p : parts) sum += p;
        if (sum != value(x).c())
            throw ConfigError("channel_split: parts sum " + std::to_string(sum) +
                              " does not match channels " + std::to_string(value(x).c()));
        std::vector<Id> out;
        int c0 = 0;
        for (int p : parts) {
            out.push_back(narrow_channels(x, c0, p));
            c0 += p;
        }
        return out;
    }

    Id channel_concat(const std::vector<Id>& xs) {
        std::vector<TensorT<T>> vals;
        vals.reserve(xs.size());
        for (Id i : xs) vals.push_back(value(i));
        return push(Op::Concat, xs, lckasr::channel_concat(vals));
    }

    Id ewise_add(Id a, Id b) { return push(Op::Add, {a, b}, lckasr::ewise_add(value(a), value(b))); }
    Id ewise_mul(Id a, Id b) { return push(Op::Mul, {a, b}, lckasr::ewise_mul(value(a), value(b))); }

    Id replicate_channels(Id x, int n) {
        Id id = push(Op::Replicate, {x}, lckasr::replicate_channels(value(x), n));
        nodes_[id].arg0 = n;
        return id;
    }

    Id mean(Id x) {
        TensorT<T> out(1, 1, 1, 1);
        out[0] = mean_value(value(x));
        return push(Op::Mean, {x}, std::move(out));
    }

    Id l1_loss(Id pred, Id target) {
        TensorT<T> out(1, 1, 1, 1);
        out[0] = l1_loss_value(value(pred), value(target));
        return push(Op::L1, {pred, target}, std::move(out));
    }

    const TensorT<T>& value(Id id) const { return nodes_[std::size_t(id)].value; }
    std::size_t size() const { return nodes_.size(); }
    bool is_leaf(Id id) const { return nodes_[std::size_t(id)].op == Op::Leaf; }

    // Gradients of a scalar loss w.r.t. every node, indexed by id. Leaves not
    // reached from the loss get zero tensors; interior unreached nodes stay
    // empty.
    std::vector<TensorT<T>> backward(Id loss) const {
        if (value(loss).size() != 1)
            throw ConfigError("backward: loss must be scalar, got shape " +
                              value(loss).shape().str());
        std::vector<TensorT<T>> grads(nodes_.size());
        grads[std::size_t(loss)] = TensorT<T>(1, 1, 1, 1, T(1));

        for (Id id = loss; id >= 0; --id) {
            const Node& node = nodes_[std::size_t(id)];
            const TensorT<T>& g = grads[std::size_t(id)];
            if (g.empty()) continue;
            switch (node.op) {
                case Op::Leaf:
                    break;
                case Op::Conv2d: {
                    const TensorT<T>& x = value(node.inputs[0]);
                    const TensorT<T>& w = value(node.inputs[1]);
                    accumulate(grads[node.inputs[0]],
                               conv2d_backward_input(g, w, node.geom, x.shape()));
                    accumulate(grads[node.inputs[1]],
                               conv2d_backward_weight(g, x, node.geom, w.shape()));
                    if (node.inputs.size() == 3)
                        accumulate(grads[node.inputs[2]], reshape_like(
                                       conv2d_backward_bias(g), value(node.inputs[2]).shape()));
                    break;
                }
                case Op::Gelu: {
                    const TensorT<T>& x = value(node.inputs[0]);
                    TensorT<T> dx(x.shape());
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        const double v = double(x[i]);
                        const double cdf = 0.5 * std::erfc(-v * M_SQRT1_2);
                        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
                        dx[i] = T(double(g[i]) * (cdf + v * pdf));
                    }
                    accumulate(grads[node.inputs[0]], std::move(dx));
                    break;
                }
                case Op::PixelShuffle:
                    accumulate(grads[node.inputs[0]], pixel_unshuffle(g, node.arg0));
                    break;
                case Op::Narrow: {
                    const TensorT<T>& x = value(node.inputs[0]);
                    TensorT<T> dx(x.shape());
                    const std::size_t plane = std::size_t(x.h()) * x.w();
                    for (int n = 0; n < x.n(); ++n)
                        std::copy_n(g.data() + g.offset(n, 0, 0, 0), plane * node.arg1,
                                    dx.data() + dx.offset(n, node.arg0, 0, 0));
                    accumulate(grads[node.inputs[0]], std::move(dx));
                    break;
                }
                case Op::Concat: {
                    int c0 = 0;
                    for (Id in : node.inputs) {
                        const int ci = value(in).c();
                        accumulate(grads[in], lckasr::narrow_channels(g, c0, ci));
                        c0 += ci;
                    }
                    break;
                }
                case Op::Add:
                    accumulate(grads[node.inputs[0]], g);
                    accumulate(grads[node.inputs[1]], g);
                    break;
                case Op::Mul:
                    accumulate(grads[node.inputs[0]],
                               lckasr::ewise_mul(g, value(node.inputs[1])));
                    accumulate(grads[node.inputs[1]],
                               lckasr::ewise_mul(g, value(node.inputs[0])));
                    break;
                case Op::Replicate: {
                    const TensorT<T>& x = value(node.inputs[0]);
                    TensorT<T> dx(x.shape());
                    for (int rep = 0; rep < node.arg0; ++rep) {
                        const std::size_t block = x.size() / x.n();
                        for (int n = 0; n < x.n(); ++n) {
                            const T* src = g.data() + g.offset(n, rep * x.c(), 0, 0);
                            T* dst = dx.data() + dx.offset(n, 0, 0, 0);
                            for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                        }
                    }
                    accumulate(grads[node.inputs[0]], std::move(dx));
                    break;
                }
                case Op::Mean: {
                    const TensorT<T>& x = value(node.inputs[0]);
                    const T scale = T(double(g[0]) / double(x.size()));
                    accumulate(grads[node.inputs[0]], TensorT<T>(x.shape(), scale));
                    break;
                }
                case Op::L1: {
                    const TensorT<T>& p = value(node.inputs[0]);
                    const TensorT<T>& t = value(node.inputs[1]);
                    const double scale = double(g[0]) / double(p.size());
                    TensorT<T> dp(p.shape());
                    for (std::size_t i = 0; i < p.size(); ++i) {
                        const double d = double(p[i]) - double(t[i]);
                        dp[i] = T(d > 0 ? scale : (d < 0 ? -scale : 0.0));
                    }
                    TensorT<T> dt(t.shape());
                    for (std::size_t i = 0; i < t.size(); ++i) dt[i] = -dp[i];
                    accumulate(grads[node.inputs[0]], std::move(dp));
                    accumulate(grads[node.inputs[1]], std::move(dt));
                    break;
                }
            }
        }

        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].op == Op::Leaf && grads[i].empty())
                grads[i] = TensorT<T>(nodes_[i].value.shape());
        return grads;
    }

private:
    enum class Op { Leaf, Conv2d, Gelu, PixelShuffle, Narrow, Concat, Add, Mul, Replicate, Mean, L1 };

    struct Node {
        Op op;
        std::vector<Id> inputs;
        TensorT<T> value;
        ConvGeometry geom;
        int arg0 = 0, arg1 = 0;
    };

    Id push(Op op, std::vector<Id> inputs, TensorT<T> value) {
        nodes_.push_back(Node{op, std::move(inputs), std::move(value), {}, 0, 0});
        return Id(nodes_.size() - 1);
    }

    static TensorT<T> reshape_like(TensorT<T> t, const Shape4& s) {
        if (t.size() != s.count())
            throw ConfigError("reshape: element count mismatch");
        return TensorT<T>(s, std::move(t.vec()));
    }

    static void accumulate(TensorT<T>& slot, TensorT<T> delta) {
        if (slot.empty()) {
            slot = std::move(delta);
            return;
        }
        for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += delta[i];
    }

    std::vector<Node> nodes_;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

}  // namespace lckasr
