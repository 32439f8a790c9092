#pragma once

#include <cmath>
#include <limits>

#include "filter.hpp"
#include "raster.hpp"

namespace screenmark {

/// Peak signal-to-noise ratio in dB over all samples; +inf for identical inputs.
inline double psnr(const RasterU8& a, const RasterU8& b) {
    if (!a.same_shape(b))
        raise(ErrorCode::ShapeMismatch, "psnr inputs must share shape");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sse / static_cast<double>(a.data.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

/// Plane SSIM: 11x11 Gaussian window (sigma 1.5), valid placements only.
inline double ssim_plane(const RasterF& x, const RasterF& y) {
    constexpr int kWindow = 11;
    constexpr int kRadius = kWindow / 2;
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

    double taps[kWindow];
    double sum = 0.0;
    for (int i = -kRadius; i <= kRadius; ++i) {
        taps[i + kRadius] = std::exp(-0.5 * (i * i) / (1.5 * 1.5));
        sum += taps[i + kRadius];
    }
    for (double& t : taps) t /= sum;

    double total = 0.0;
    std::size_t count = 0;
    for (int cy = kRadius; cy < x.height - kRadius; ++cy) {
        for (int cx = kRadius; cx < x.width - kRadius; ++cx) {
            double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
            for (int wy = -kRadius; wy <= kRadius; ++wy) {
                for (int wx = -kRadius; wx <= kRadius; ++wx) {
                    const double w = taps[wx + kRadius] * taps[wy + kRadius];
                    const double vx = x.at(cx + wx, cy + wy);
                    const double vy = y.at(cx + wx, cy + wy);
                    mx += w * vx;
                    my += w * vy;
                    mxx += w * vx * vx;
                    myy += w * vy * vy;
                    mxy += w * vx * vy;
                }
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            const double num = (2.0 * mx * my + kC1) * (2.0 * cov + kC2);
            const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace detail

/**
 * Structural similarity. Color inputs are converted to a luma plane first.
 * Requires both sides of the image to be at least the 11-pixel window.
 */
inline double ssim(const RasterU8& a, const RasterU8& b) {
    if (!a.same_shape(b))
        raise(ErrorCode::ShapeMismatch, "ssim inputs must share shape");
    if (a.width < 11 || a.height < 11)
        raise(ErrorCode::ImageTooSmall, "ssim needs at least 11 pixels per side");
    return detail::ssim_plane(gray_plane(a), gray_plane(b));
}

/// Bit error rate between equal-length bit strings.
inline double ber(const BitString& sent, const BitString& received) {
    if (sent.size() != received.size())
        raise(ErrorCode::LengthMismatch, "bit strings must have equal length");
    if (sent.size() == 0)
        raise(ErrorCode::LengthMismatch, "bit strings must be non-empty");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < sent.size(); ++i)
        wrong += (sent[i] != received[i]) ? 1 : 0;
    return static_cast<double>(wrong) / static_cast<double>(sent.size());
}

struct QualityReport {
    double psnr_db = 0.0;
    double ssim_value = 0.0;
};

inline QualityReport quality(const RasterU8& reference, const RasterU8& test) {
    return QualityReport{psnr(reference, test), ssim(reference, test)};
}

}  // namespace screenmark
