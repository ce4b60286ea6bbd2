#pragma once

#include <vector>

#include "lckasr/image.hpp"

namespace lckasr {

// BT.601 studio-swing luma from 8-bit RGB: Y = 16 + (65.481 R + 128.553 G +
// 24.966 B) / 255, range [16, 235].
std::vector<double> rgb_to_y(const ImageU8& img);

// Cubic convolution resampling, a = -0.5, replicated edges, normalized
// weights. When an axis shrinks the kernel is widened by the ratio
// (antialiasing), matching the reference degradation used by BI benchmarks.
std::vector<double> bicubic_resample_plane(const std::vector<double>& src, int in_h, int in_w,
                                           int out_h, int out_w, bool antialias = true);

ImageU8 bicubic_resize(const ImageU8& img, int out_h, int out_w, bool antialias = true);

// Crop to a multiple of the scale, then bicubic-downscale by it.
ImageU8 degrade_bicubic(const ImageU8& hr, int scale);

ImageU8 nearest_resize(const ImageU8& img, int out_h, int out_w);

struct MetricPair {
    double psnr = 0.0;  // dB, +infinity for identical inputs
    double ssim = 0.0;
};

// PSNR between two luma planes (peak 255) after cropping border_crop pixels
// per side; +infinity when they are identical.
double psnr_plane(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                  int border_crop);

// Y-channel PSNR after cropping border_crop pixels per side.
double psnr_y(const ImageU8& a, const ImageU8& b, int border_crop);

// Y-channel SSIM: 11x11 Gaussian window sigma 1.5, K1 = 0.01, K2 = 0.03,
// L = 255, valid-window traversal.
double ssim_y(const ImageU8& a, const ImageU8& b, int border_crop);

MetricPair evaluate_pair(const ImageU8& a, const ImageU8& b, int border_crop);

}  // namespace lckasr
