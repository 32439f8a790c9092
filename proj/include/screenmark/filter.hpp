#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "raster.hpp"

namespace screenmark {

/// Dense row-major kernel for 2-D convolution.
struct Kernel {
    int width = 0;
    int height = 0;
    std::vector<double> weights;

    Kernel() = default;
    Kernel(int w, int h) : width(w), height(h), weights(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return weights[static_cast<std::size_t>(y) * width + x]; }
};

inline int clamp_index(int v, int lo, int hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

/**
 * 2-D correlation with replicate border handling.
 *
 * Kernel sides must be odd so the anchor sits on a pixel. Weights are applied
 * without flipping; every kernel in this library is defined in image
 * orientation already.
 */
inline RasterF convolve2d(const RasterF& src, const Kernel& kernel) {
    if (kernel.width % 2 == 0 || kernel.height % 2 == 0)
        raise(ErrorCode::EvenKernel, "kernel sides must be odd");
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    RasterF out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int ky = -ry; ky <= ry; ++ky) {
                const int sy = clamp_index(y + ky, 0, src.height - 1);
                for (int kx = -rx; kx <= rx; ++kx) {
                    const int sx = clamp_index(x + kx, 0, src.width - 1);
                    acc += kernel.at(kx + rx, ky + ry) * src.at(sx, sy);
                }
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

/// Normalized Gaussian kernel; radius covers 3 sigma (at least 1).
inline std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0)
        raise(ErrorCode::NonPositiveSigma, "gaussian sigma must be positive");
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        taps[i + radius] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

/// Separable Gaussian blur with replicate borders.
inline RasterF gaussian_blur(const RasterF& src, double sigma) {
    const std::vector<double> taps = gaussian_taps(sigma);
    const int radius = static_cast<int>(taps.size()) / 2;

    RasterF tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * src.at(clamp_index(x + k, 0, src.width - 1), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    RasterF out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * tmp.at(x, clamp_index(y + k, 0, src.height - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

/// Mean over an odd square window, replicate borders.
inline RasterF box_filter(const RasterF& src, int size) {
    if (size % 2 == 0 || size <= 0)
        raise(ErrorCode::EvenWindow, "box window must be odd and positive");
    const int radius = size / 2;
    const double inv = 1.0 / (size * size);
    RasterF out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int ky = -radius; ky <= radius; ++ky) {
                const int sy = clamp_index(y + ky, 0, src.height - 1);
                for (int kx = -radius; kx <= radius; ++kx)
                    acc += src.at(clamp_index(x + kx, 0, src.width - 1), sy);
            }
            out.at(x, y) = static_cast<float>(acc * inv);
        }
    }
    return out;
}

/// Median over an odd square window, replicate borders.
inline RasterU8 median_filter(const RasterU8& src, int size) {
    if (size % 2 == 0 || size <= 0)
        raise(ErrorCode::EvenWindow, "median window must be odd and positive");
    if (src.channels != 1)
        raise(ErrorCode::ChannelMismatch, "median_filter expects a single channel");
    const int radius = size / 2;
    RasterU8 out(src.width, src.height, 1);
    std::vector<std::uint8_t> window;
    window.reserve(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            window.clear();
            for (int ky = -radius; ky <= radius; ++ky) {
                const int sy = clamp_index(y + ky, 0, src.height - 1);
                for (int kx = -radius; kx <= radius; ++kx)
                    window.push_back(src.at(clamp_index(x + kx, 0, src.width - 1), sy));
            }
            auto mid = window.begin() + window.size() / 2;
            std::nth_element(window.begin(), mid, window.end());
            out.at(x, y) = *mid;
        }
    }
    return out;
}

/// Apply a float-plane operation to every channel of a u8 raster, re-quantizing.
template <typename PlaneOp>
inline RasterU8 per_channel(const RasterU8& src, PlaneOp&& op) {
    RasterU8 out(src.width, src.height, src.channels);
    for (int c = 0; c < src.channels; ++c) {
        RasterF plane = channel_plane(src, c);
        RasterF filtered = op(plane);
        for (std::size_t i = 0; i < filtered.data.size(); ++i)
            out.data[i * src.channels + c] = clamp_round_u8(filtered.data[i]);
    }
    return out;
}

}  // namespace screenmark
