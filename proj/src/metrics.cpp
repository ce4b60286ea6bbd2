#include "lckasr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lckasr/common.hpp"

namespace lckasr {

std::vector<double> rgb_to_y(const ImageU8& img) {
    std::vector<double> y(std::size_t(img.height) * img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            y[std::size_t(r) * img.width + c] =
                16.0 + (65.481 * img.at(r, c, 0) + 128.553 * img.at(r, c, 1) +
                        24.966 * img.at(r, c, 2)) / 255.0;
    return y;
}

namespace {

// Keys cubic convolution kernel with a = -0.5.
double cubic(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

// One axis of separable resampling over the rows of a (h x w) plane laid out
// row-major; resamples the w axis. The caller transposes for the other axis.
std::vector<double> resample_rows(const std::vector<double>& src, int h, int w, int out_w,
                                  bool antialias) {
    const double scale = double(w) / double(out_w);
    const double kscale = (antialias && scale > 1.0) ? scale : 1.0;
    const double support = 2.0 * kscale;

    std::vector<double> out(std::size_t(h) * out_w);
    std::vector<int> taps;
    std::vector<double> weights;
    for (int i = 0; i < out_w; ++i) {
        const double u = (i + 0.5) * scale - 0.5;
        const int lo = int(std::floor(u - support)) + 1;
        const int hi = int(std::floor(u + support));
        taps.clear();
        weights.clear();
        double wsum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double wgt = cubic((u - j) / kscale) / kscale;
            if (wgt == 0.0) continue;
            taps.push_back(std::clamp(j, 0, w - 1));
            weights.push_back(wgt);
            wsum += wgt;
        }
        for (double& wgt : weights) wgt /= wsum;
        for (int r = 0; r < h; ++r) {
            const double* row = src.data() + std::size_t(r) * w;
            double acc = 0.0;
            for (std::size_t k = 0; k < taps.size(); ++k) acc += weights[k] * row[taps[k]];
            out[std::size_t(r) * out_w + i] = acc;
        }
    }
    return out;
}

std::vector<double> transpose_plane(const std::vector<double>& src, int h, int w) {
    std::vector<double> out(src.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out[std::size_t(c) * h + r] = src[std::size_t(r) * w + c];
    return out;
}

}  // namespace

std::vector<double> bicubic_resample_plane(const std::vector<double>& src, int in_h, int in_w,
                                           int out_h, int out_w, bool antialias) {
    if (out_h < 1 || out_w < 1) throw ConfigError("resize: target dimensions must be positive");
    std::vector<double> tmp = resample_rows(src, in_h, in_w, out_w, antialias);
    tmp = transpose_plane(tmp, in_h, out_w);
    tmp = resample_rows(tmp, out_w, in_h, out_h, antialias);
    return transpose_plane(tmp, out_w, out_h);
}

ImageU8 bicubic_resize(const ImageU8& img, int out_h, int out_w, bool antialias) {
    ImageU8 out;
    out.height = out_h;
    out.width = out_w;
    out.rgb.resize(std::size_t(out_h) * out_w * 3);
    std::vector<double> plane(std::size_t(img.height) * img.width);
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c)
                plane[std::size_t(r) * img.width + c] = double(img.at(r, c, ch));
        const auto res = bicubic_resample_plane(plane, img.height, img.width, out_h, out_w,
                                                antialias);
        for (int r = 0; r < out_h; ++r)
            for (int c = 0; c < out_w; ++c) {
                double v = std::clamp(res[std::size_t(r) * out_w + c], 0.0, 255.0);
                out.at(r, c, ch) = std::uint8_t(std::lround(v));
            }
    }
    return out;
}

ImageU8 degrade_bicubic(const ImageU8& hr, int scale) {
    if (scale < 1) throw ConfigError("degrade: scale must be positive");
    const int ch = hr.height - hr.height % scale;
    const int cw = hr.width - hr.width % scale;
    if (ch < scale || cw < scale) throw DataError("degrade: image smaller than the scale");
    ImageU8 cropped;
    cropped.height = ch;
    cropped.width = cw;
    cropped.rgb.resize(std::size_t(ch) * cw * 3);
    for (int r = 0; r < ch; ++r)
        for (int c = 0; c < cw; ++c)
            for (int k = 0; k < 3; ++k) cropped.at(r, c, k) = hr.at(r, c, k);
    if (scale == 1) return cropped;
    return bicubic_resize(cropped, ch / scale, cw / scale, true);
}

ImageU8 nearest_resize(const ImageU8& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ConfigError("resize: target dimensions must be positive");
    ImageU8 out;
    out.height = out_h;
    out.width = out_w;
    out.rgb.resize(std::size_t(out_h) * out_w * 3);
    for (int r = 0; r < out_h; ++r) {
        const int sr = std::min(img.height - 1, int(double(r) * img.height / out_h));
        for (int c = 0; c < out_w; ++c) {
            const int sc = std::min(img.width - 1, int(double(c) * img.width / out_w));
            for (int k = 0; k < 3; ++k) out.at(r, c, k) = img.at(sr, sc, k);
        }
    }
    return out;
}

namespace {

void check_same_dims(const ImageU8& a, const ImageU8& b) {
    if (a.height != b.height || a.width != b.width)
        throw DataError("metric: image dimensions differ, " + std::to_string(a.height) + "x" +
                        std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                        std::to_string(b.width));
}

}  // namespace

double psnr_plane(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                  int border_crop) {
    if (a.size() != b.size() || a.size() != std::size_t(h) * w)
        throw DataError("psnr: plane dimensions differ");
    if (border_crop < 0) throw ConfigError("psnr: border crop must be non-negative");
    const int ch = h - 2 * border_crop;
    const int cw = w - 2 * border_crop;
    if (ch < 1 || cw < 1) throw DataError("psnr: nothing left after border crop");
    double mse = 0.0;
    for (int r = 0; r < ch; ++r)
        for (int c = 0; c < cw; ++c) {
            const std::size_t i = std::size_t(r + border_crop) * w + (c + border_crop);
            const double d = a[i] - b[i];
            mse += d * d;
        }
    mse /= double(ch) * double(cw);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr_y(const ImageU8& a, const ImageU8& b, int border_crop) {
    check_same_dims(a, b);
    return psnr_plane(rgb_to_y(a), rgb_to_y(b), a.height, a.width, border_crop);
}

double ssim_y(const ImageU8& a, const ImageU8& b, int border_crop) {
    check_same_dims(a, b);
    if (border_crop < 0) throw ConfigError("ssim: border crop must be non-negative");
    constexpr int win = 11;
    constexpr double sigma = 1.5;
    constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);

    const int h = a.height - 2 * border_crop;
    const int w = a.width - 2 * border_crop;
    if (h < win || w < win) throw DataError("ssim: image too small after border crop");

    double g[win * win];
    double gsum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double dy = i - (win - 1) / 2.0;
            const double dx = j - (win - 1) / 2.0;
            g[i * win + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            gsum += g[i * win + j];
        }
    for (double& v : g) v /= gsum;

    const auto ya = rgb_to_y(a);
    const auto yb = rgb_to_y(b);
    const int stride = a.width;

    double total = 0.0;
    std::size_t windows = 0;
    for (int r = 0; r + win <= h; ++r)
        for (int c = 0; c + win <= w; ++c) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const std::size_t idx =
                        std::size_t(border_crop + r + i) * stride + (border_crop + c + j);
                    const double wv = g[i * win + j];
                    const double xv = ya[idx];
                    const double yv = yb[idx];
                    mx += wv * xv;
                    my += wv * yv;
                    sxx += wv * xv * xv;
                    syy += wv * yv * yv;
                    sxy += wv * xv * yv;
                }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cov = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    return total / double(windows);
}

MetricPair evaluate_pair(const ImageU8& a, const ImageU8& b, int border_crop) {
    return MetricPair{psnr_y(a, b, border_crop), ssim_y(a, b, border_crop)};
}

}  // namespace lckasr
