#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lckasr/tensor.hpp"

namespace lckasr {

// 8-bit interleaved RGB image, the file-boundary type.
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;  // height * width * 3

    std::uint8_t& at(int y, int x, int ch) { return rgb[(std::size_t(y) * width + x) * 3 + ch]; }
    std::uint8_t at(int y, int x, int ch) const {
        return rgb[(std::size_t(y) * width + x) * 3 + ch];
    }
};

// (1, 3, H, W) tensor in [0, 1].
Tensor image_to_tensor(const ImageU8& img);

// Clamp to [0, 1], quantize round-to-nearest. Clamping happens only here, at
// image export.
ImageU8 tensor_to_image(const Tensor& t);

inline Tensor image_to_tensor(const ImageU8& img) {
    Tensor t(1, 3, img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = float(img.at(y, x, c)) / 255.0f;
    return t;
}

inline ImageU8 tensor_to_image(const Tensor& t) {
    ImageU8 img;
    img.height = t.h();
    img.width = t.w();
    img.rgb.resize(std::size_t(t.h()) * t.w() * 3);
    for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x)
            for (int c = 0; c < 3; ++c) {
                double v = double(t.at(0, c, y, x)) * 255.0;
                v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
                img.at(y, x, c) = std::uint8_t(std::lround(v));
            }
    return img;
}

}  // namespace lckasr
