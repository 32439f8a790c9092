#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "filter.hpp"
#include "raster.hpp"

namespace screenmark {

/**
 * Pixel-domain perceptibility model.
 *
 * The map combines a luminance adaptation threshold with a texture masking
 * term computed from local background luminance and the maximum directional
 * gradient, in the classical 5x5-kernel formulation.
 */
struct JndParams {
    double lambda1 = 1.0;  // masking weight
    double lambda2 = 0.0;  // gray-level offset added to the masking term
};

namespace detail {

inline Kernel make_kernel5(const std::array<std::array<double, 5>, 5>& rows, double divisor) {
    Kernel k(5, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            k.at(x, y) = rows[y][x] / divisor;
    return k;
}

inline const Kernel& background_kernel() {
    static const Kernel k = make_kernel5({{{1, 1, 1, 1, 1},
                                           {1, 2, 2, 2, 1},
                                           {1, 2, 0, 2, 1},
                                           {1, 2, 2, 2, 1},
                                           {1, 1, 1, 1, 1}}},
                                         32.0);
    return k;
}

inline const std::array<Kernel, 4>& gradient_kernels() {
    static const std::array<Kernel, 4> banks = {
        make_kernel5({{{0, 0, 0, 0, 0},
                       {1, 3, 8, 3, 1},
                       {0, 0, 0, 0, 0},
                       {-1, -3, -8, -3, -1},
                       {0, 0, 0, 0, 0}}},
                     16.0),
        make_kernel5({{{0, 0, 1, 0, 0},
                       {0, 8, 3, 0, 0},
                       {1, 3, 0, -3, -1},
                       {0, 0, -3, -8, 0},
                       {0, 0, -1, 0, 0}}},
                     16.0),
        make_kernel5({{{0, 0, 1, 0, 0},
                       {0, 0, 3, 8, 0},
                       {-1, -3, 0, 3, 1},
                       {0, -8, -3, 0, 0},
                       {0, 0, -1, 0, 0}}},
                     16.0),
        make_kernel5({{{0, 1, 0, -1, 0},
                       {0, 3, 0, -3, 0},
                       {0, 8, 0, -8, 0},
                       {0, 3, 0, -3, 0},
                       {0, 1, 0, -1, 0}}},
                     16.0),
    };
    return banks;
}

}  // namespace detail

/// Weighted 5x5 local mean of the luminance plane, replicate borders.
inline RasterF background_luminance(const RasterU8& gray) {
    if (gray.channels != 1)
        raise(ErrorCode::ChannelMismatch, "background_luminance expects a single channel");
    return convolve2d(channel_plane(gray, 0), detail::background_kernel());
}

/// Largest directional gradient magnitude over the four 5x5 banks.
inline RasterF max_gradient(const RasterU8& gray) {
    if (gray.channels != 1)
        raise(ErrorCode::ChannelMismatch, "max_gradient expects a single channel");
    const RasterF plane = channel_plane(gray, 0);
    RasterF out(gray.width, gray.height, 0.0f);
    for (const Kernel& g : detail::gradient_kernels()) {
        RasterF response = convolve2d(plane, g);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = std::max(out.data[i], std::abs(response.data[i]));
    }
    return out;
}

/// Visibility threshold from background luminance alone. Minimum 3 at
/// mid-gray, rising toward both black (20) and white (6).
inline double luminance_adaptation(double bg) {
    if (bg < 0.0 || bg > 255.0)
        raise(ErrorCode::OutOfRange, "background luminance outside [0, 255]");
    if (bg <= 127.0)
        return 17.0 * (1.0 - bg / 127.0) + 3.0;
    return (3.0 / 128.0) * (bg - 127.0) + 3.0;
}

/// Texture masking term: gradient scaled by a luminance-dependent slope plus
/// a dark-region allowance that fades out above bg = 50.
inline RasterF spatial_masking(const RasterF& bg, const RasterF& mg) {
    if (!bg.same_shape(mg))
        raise(ErrorCode::ShapeMismatch, "spatial_masking planes must share shape");
    RasterF out(bg.width, bg.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double b = bg.data[i];
        const double alpha = 0.0001 * b + 0.115;
        const double beta = 0.5 - 0.01 * b;
        out.data[i] = static_cast<float>(mg.data[i] * alpha + std::max(0.0, beta));
    }
    return out;
}

/// Per-pixel distortion threshold plane; strictly positive everywhere.
inline RasterF jnd_map(const RasterU8& gray, const JndParams& params = {}) {
    if (gray.channels != 1)
        raise(ErrorCode::ChannelMismatch, "jnd_map expects a single channel");
    const RasterF bg = background_luminance(gray);
    const RasterF mg = max_gradient(gray);
    const RasterF f1 = spatial_masking(bg, mg);
    RasterF out(gray.width, gray.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double b = std::clamp(static_cast<double>(bg.data[i]), 0.0, 255.0);
        out.data[i] = static_cast<float>(params.lambda1 * (f1.data[i] + params.lambda2) +
                                         luminance_adaptation(b));
    }
    return out;
}

}  // namespace screenmark
