#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "filter.hpp"
#include "raster.hpp"
#include "rng.hpp"

namespace screenmark {

/**
 * Doubly mirror-symmetric zero-mean noise plane. Both mirrorings are about
 * the half-integer center lines, so every sample equals its horizontal and
 * vertical mirror exactly.
 */
struct SymmetricTemplate {
    RasterF plane;
};

/// Symmetry score per boundary position. scores[j] rates the axis between
/// columns (or rows) j-1 and j; positions too close to a border stay 0.
struct SymmetryProfile {
    std::vector<double> scores;
    bool column_axes = true;  // false: scores index row boundaries
};

enum class Quadrant { TL, TR, BL, BR };

inline const char* quadrant_name(Quadrant q) {
    switch (q) {
        case Quadrant::TL: return "TL";
        case Quadrant::TR: return "TR";
        case Quadrant::BL: return "BL";
        case Quadrant::BR: return "BR";
    }
    return "??";
}

struct SubImageRect {
    int x = 0;
    int y = 0;
    int side = 0;
    Quadrant quadrant = Quadrant::TL;
};

struct CropBounds {
    std::vector<SubImageRect> rects;
    int axis_x = 0;  // boundary position: between columns axis_x-1 and axis_x
    int axis_y = 0;
};

/**
 * Build the template from an i.i.d. Gaussian quarter plane (std = amplitude),
 * mirrored right then down, then shifted to exact zero mean.
 */
inline SymmetricTemplate make_symmetric_template(Rng& rng, int width, int height,
                                                 double amplitude) {
    if (width % 2 != 0 || height % 2 != 0)
        raise(ErrorCode::OddDimensions, "template dimensions must be even");
    if (amplitude <= 0.0)
        raise(ErrorCode::OutOfRange, "template amplitude must be positive");

    const int qw = width / 2;
    const int qh = height / 2;
    RasterF quarter(qw, qh);
    for (int y = 0; y < qh; ++y)
        for (int x = 0; x < qw; ++x)
            quarter.at(x, y) = static_cast<float>(rng.normal(0.0, amplitude));

    SymmetricTemplate tmpl{RasterF(width, height)};
    for (int y = 0; y < height; ++y) {
        const int qy = std::min(y, height - 1 - y);
        for (int x = 0; x < width; ++x)
            tmpl.plane.at(x, y) = quarter.at(std::min(x, width - 1 - x), qy);
    }

    double mean = 0.0;
    for (float v : tmpl.plane.data) mean += v;
    mean /= static_cast<double>(tmpl.plane.data.size());
    for (float& v : tmpl.plane.data) v = static_cast<float>(v - mean);
    return tmpl;
}

/// Add the template to a single-channel plane, clamped to [0, 255].
inline RasterU8 embed_template(const RasterU8& red, const SymmetricTemplate& tmpl) {
    if (red.channels != 1)
        raise(ErrorCode::ChannelMismatch, "embed_template expects a single channel");
    if (red.width != tmpl.plane.width || red.height != tmpl.plane.height)
        raise(ErrorCode::ShapeMismatch, "template and channel dimensions differ");
    RasterU8 out(red.width, red.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp_round_u8(red.data[i] + tmpl.plane.data[i]);
    return out;
}

/**
 * High-frequency residual left after an adaptive 3x3 Wiener estimate.
 * The noise power is the mean of the local variances, so smooth regions
 * collapse to zero and additive white structure survives.
 */
inline RasterF wiener_residual(const RasterU8& red) {
    if (red.channels != 1)
        raise(ErrorCode::ChannelMismatch, "wiener_residual expects a single channel");
    const RasterF plane = channel_plane(red, 0);
    const RasterF mean = box_filter(plane, 3);

    RasterF sq(plane.width, plane.height);
    for (std::size_t i = 0; i < sq.data.size(); ++i)
        sq.data[i] = plane.data[i] * plane.data[i];
    const RasterF mean_sq = box_filter(sq, 3);

    RasterF variance(plane.width, plane.height);
    double noise = 0.0;
    for (std::size_t i = 0; i < variance.data.size(); ++i) {
        variance.data[i] = std::max(0.0f, mean_sq.data[i] - mean.data[i] * mean.data[i]);
        noise += variance.data[i];
    }
    noise /= static_cast<double>(variance.data.size());

    RasterF residual(plane.width, plane.height);
    for (std::size_t i = 0; i < residual.data.size(); ++i) {
        const double v = variance.data[i];
        const double gain = (v > noise && v > 0.0) ? (v - noise) / v : 0.0;
        const double estimate = mean.data[i] + gain * (plane.data[i] - mean.data[i]);
        residual.data[i] = static_cast<float>(plane.data[i] - estimate);
    }
    return residual;
}

/// Zero-mean unit-variance rescale (sample std, denominator n).
inline RasterF standardize(const RasterF& segment) {
    const std::size_t n = segment.data.size();
    if (n < 2)
        raise(ErrorCode::ZeroVariance, "segment needs at least 2 samples");
    double sum = 0.0, sum_sq = 0.0;
    for (float v : segment.data) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    if (var <= 0.0)
        raise(ErrorCode::ZeroVariance, "segment variance is zero");
    const double inv_std = 1.0 / std::sqrt(var);
    RasterF out = segment;
    for (float& v : out.data)
        v = static_cast<float>((v - mean) * inv_std);
    return out;
}

namespace detail {

inline RasterF transpose_plane(const RasterF& p) {
    RasterF out(p.height, p.width);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            out.at(y, x) = p.at(x, y);
    return out;
}

}  // namespace detail

/**
 * Mirror-correlation profile over vertical axes. For the boundary between
 * columns j-1 and j, the bands of width d_j = min(j, W-j) on either side are
 * paired mirror-wise (column j-1-i against column j+i), standardized as whole
 * bands, and scored by their Pearson correlation. Boundaries with d_j < 4
 * carry no evidence and score 0.
 */
inline SymmetryProfile column_symmetry(const RasterF& residual) {
    const int w = residual.width;
    const int h = residual.height;
    if (w < 8)
        raise(ErrorCode::TooNarrow, "residual too narrow for symmetry analysis");

    SymmetryProfile profile;
    profile.scores.assign(static_cast<std::size_t>(w) + 1, 0.0);
    profile.column_axes = true;

    for (int j = 4; j <= w - 4; ++j) {
        const int d = std::min(j, w - j);
        const double n = static_cast<double>(d) * h;
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int i = 0; i < d; ++i) {
            const int left = j - 1 - i;
            const int right = j + i;
            for (int y = 0; y < h; ++y) {
                const double a = residual.at(left, y);
                const double b = residual.at(right, y);
                sa += a;
                sb += b;
                saa += a * a;
                sbb += b * b;
                sab += a * b;
            }
        }
        const double var_a = saa / n - (sa / n) * (sa / n);
        const double var_b = sbb / n - (sb / n) * (sb / n);
        if (var_a <= 0.0 || var_b <= 0.0) continue;
        const double cov = sab / n - (sa / n) * (sb / n);
        profile.scores[j] = cov / std::sqrt(var_a * var_b);
    }
    return profile;
}

inline SymmetryProfile row_symmetry(const RasterF& residual) {
    SymmetryProfile profile = column_symmetry(detail::transpose_plane(residual));
    profile.column_axes = false;
    return profile;
}

/// Subtract a moving average so broad trends vanish and sharp peaks remain.
inline SymmetryProfile highpass_profile(const SymmetryProfile& profile, int window = 31) {
    if (window % 2 == 0 || window <= 0)
        raise(ErrorCode::EvenWindow, "smoothing window must be odd and positive");
    const int n = static_cast<int>(profile.scores.size());
    const int r = window / 2;
    SymmetryProfile out = profile;
    for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        int count = 0;
        for (int k = -r; k <= r; ++k) {
            const int idx = j + k;
            if (idx < 0 || idx >= n) continue;
            sum += profile.scores[idx];
            ++count;
        }
        out.scores[j] = profile.scores[j] - sum / count;
    }
    return out;
}

namespace detail {

/// Best axis position by high-passed score; -1 when nothing clears tau.
inline int best_axis(const SymmetryProfile& highpassed, double tau) {
    int best = -1;
    double best_score = tau;
    for (std::size_t j = 0; j < highpassed.scores.size(); ++j)
        if (highpassed.scores[j] > best_score) {
            best_score = highpassed.scores[j];
            best = static_cast<int>(j);
        }
    return best;
}

}  // namespace detail

/**
 * Locate the template's symmetry axes in a (possibly cropped) watermarked
 * image and enumerate the complete sub-images they imply. Sub-image corners
 * can only sit on a detected axis, one sub-side away from it, or both.
 */
inline CropBounds recover_subimages(const RasterU8& cropped, int sub_side, double tau = 0.15) {
    if (cropped.channels != 3)
        raise(ErrorCode::ChannelMismatch, "recover_subimages expects a 3-channel image");
    if (cropped.width < sub_side || cropped.height < sub_side)
        raise(ErrorCode::NoSymmetryFound, "no complete sub-image fits inside the cropped area");

    RasterU8 red(cropped.width, cropped.height, 1);
    for (std::size_t i = 0; i < red.data.size(); ++i)
        red.data[i] = cropped.data[i * 3];
    const RasterF residual = wiener_residual(red);

    const int axis_x = detail::best_axis(highpass_profile(column_symmetry(residual)), tau);
    const int axis_y = detail::best_axis(highpass_profile(row_symmetry(residual)), tau);
    if (axis_x < 0 || axis_y < 0)
        raise(ErrorCode::NoSymmetryFound,
              std::string("no symmetry axis above threshold (") +
                  (axis_x < 0 ? "columns" : "rows") + " missing)");

    CropBounds bounds;
    bounds.axis_x = axis_x;
    bounds.axis_y = axis_y;

    const auto origins = [&](int axis, int limit) {
        std::vector<int> anchors;
        if (axis - sub_side >= 0) anchors.push_back(axis - sub_side);
        if (axis + sub_side <= limit) anchors.push_back(axis);
        return anchors;
    };

    for (int oy : origins(axis_y, cropped.height))
        for (int ox : origins(axis_x, cropped.width)) {
            SubImageRect rect;
            rect.x = ox;
            rect.y = oy;
            rect.side = sub_side;
            const bool left = ox < axis_x;
            const bool top = oy < axis_y;
            rect.quadrant = top ? (left ? Quadrant::TL : Quadrant::TR)
                                : (left ? Quadrant::BL : Quadrant::BR);
            bounds.rects.push_back(rect);
        }
    return bounds;
}

}  // namespace screenmark
