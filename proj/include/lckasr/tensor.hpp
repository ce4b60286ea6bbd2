#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lckasr/common.hpp"

namespace lckasr {

// NCHW shape. All data in this library is a dense 4-D block.
struct Shape4 {
    int n = 0, c = 0, h = 0, w = 0;

    bool operator==(const Shape4&) const = default;

    std::size_t count() const {
        return std::size_t(n) * std::size_t(c) * std::size_t(h) * std::size_t(w);
    }

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

// Dense NCHW tensor, contiguous row-major: offset(n,c,h,w) = ((n*C + c)*H + h)*W + w.
// Float is the working precision; the double instantiation backs the gradient
// check path.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(Shape4 s, T fill = T(0)) : shape_(s), data_(s.count(), fill) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
            throw ConfigError("tensor shape has a negative extent " + s.str());
    }

    TensorT(int n, int c, int h, int w, T fill = T(0)) : TensorT(Shape4{n, c, h, w}, fill) {}

    TensorT(Shape4 s, std::vector<T> values) : shape_(s), data_(std::move(values)) {
        if (data_.size() != s.count())
            throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                              " does not match shape " + s.str());
    }

    const Shape4& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    std::size_t offset(int n, int c, int h, int w) const {
        return ((std::size_t(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    void fill(T v) { data_.assign(data_.size(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    Shape4 shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
TensorT<T> zeros_like(const TensorT<T>& t) {
    return TensorT<T>(t.shape());
}

// --- dihedral transforms (self-ensemble) -----------------------------------

// Counter-clockwise quarter turn of the spatial plane: out has shape (N,C,W,H).
template <typename T>
TensorT<T> rot90_ccw(const TensorT<T>& t) {
    TensorT<T> out(t.n(), t.c(), t.w(), t.h());
    for (int n = 0; n < t.n(); ++n)
        for (int c = 0; c < t.c(); ++c)
            for (int h = 0; h < t.h(); ++h)
                for (int w = 0; w < t.w(); ++w)
                    out.at(n, c, t.w() - 1 - w, h) = t.at(n, c, h, w);
    return out;
}

template <typename T>
TensorT<T> flip_horizontal(const TensorT<T>& t) {
    TensorT<T> out(t.shape());
    for (int n = 0; n < t.n(); ++n)
        for (int c = 0; c < t.c(); ++c)
            for (int h = 0; h < t.h(); ++h)
                for (int w = 0; w < t.w(); ++w)
                    out.at(n, c, h, t.w() - 1 - w) = t.at(n, c, h, w);
    return out;
}

// The 8 transforms of the dihedral group: index = flip * 4 + quarter_turns.
template <typename T>
TensorT<T> dihedral_apply(const TensorT<T>& t, int index) {
    TensorT<T> out = (index & 4) ? flip_horizontal(t) : t;
    for (int r = 0; r < (index & 3); ++r) out = rot90_ccw(out);
    return out;
}

template <typename T>
TensorT<T> dihedral_invert(const TensorT<T>& t, int index) {
    TensorT<T> out = t;
    for (int r = 0; r < (4 - (index & 3)) % 4; ++r) out = rot90_ccw(out);
    if (index & 4) out = flip_horizontal(out);
    return out;
}

}  // namespace lckasr
