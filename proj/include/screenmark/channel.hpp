#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "filter.hpp"
#include "geometry.hpp"
#include "raster.hpp"
#include "rng.hpp"

namespace screenmark {

/**
 * Screen-shooting channel configuration.
 *
 * Severity schedules are linear ramps in the step index: each distortion's
 * sampling range grows from zero until its ramp length, then stays at the
 * configured maximum. Motion blur is the exception: handheld shake does not
 * depend on the schedule, so its range is fixed and only its probability
 * gates it.
 */
struct ChannelConfig {
    std::uint64_t seed = 0;
    long step = 0;
    long total_steps = 175000;

    long brightness_ramp_steps = 100;
    double brightness_max_offset = 24.0;  // gray levels

    long contrast_ramp_steps = 1000;
    double contrast_max_deviation = 0.3;  // dimensionless

    long saturation_ramp_steps = 1000;
    double saturation_min_theta3 = 0.7;

    long noise_ramp_steps = 1000;
    double noise_max_sigma = 5.1;  // gray levels

    long blur_ramp_steps = 1000;  // defocus severity ramp
    int blur_max_kernel = 5;      // odd
    double blur_max_sigma = 1.5;

    double moire_probability = 0.75;
    double motion_blur_probability = 1.0;
    double moire_blur_sigma = 1.0;
    double moire_offset = 0.02;  // perspective jitter as a fraction of side
};

enum class BlurKind { None, Defocus, Motion };

/**
 * Record of one channel application. Replaying a trace on the same input
 * reproduces the output byte-exactly; per-sample randomness is captured as
 * sub-stream seeds rather than raw samples.
 */
struct DistortionTrace {
    double theta1 = 1.0;
    double theta2 = 0.0;
    double theta3 = 1.0;
    BlurKind blur_kind = BlurKind::None;
    int blur_n = 1;
    double blur_sigma = 0.0;
    double blur_theta = 0.0;
    bool moire_applied = false;
    std::uint64_t moire_seed = 0;
    double moire_offset = 0.0;
    double moire_blur_sigma = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;
};

// ---------------------------------------------------------------------------
// Individual distortions

/// Linear contrast/brightness remap: v' = theta1 * v + theta2, clamped.
inline RasterU8 color_gamut(const RasterU8& img, double theta1, double theta2) {
    if (theta1 <= 0.0)
        raise(ErrorCode::NonPositiveContrast, "contrast factor must be positive");
    RasterU8 out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = clamp_round_u8(theta1 * img.data[i] + theta2);
    return out;
}

/// Blend toward the shared luma plane: v' = theta3 * v + (1 - theta3) * luma.
inline RasterU8 saturation(const RasterU8& img, double theta3) {
    if (theta3 < 0.0 || theta3 > 1.0)
        raise(ErrorCode::OutOfRange, "saturation level must be in [0, 1]");
    if (img.channels != 3)
        raise(ErrorCode::ChannelMismatch, "saturation expects a 3-channel image");
    RasterU8 out(img.width, img.height, 3);
    const std::size_t pixels = out.data.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) {
        const std::uint8_t* p = img.data.data() + i * 3;
        const double gray = luma(p[0], p[1], p[2]);
        for (int c = 0; c < 3; ++c)
            out.data[i * 3 + c] = clamp_round_u8(theta3 * p[c] + (1.0 - theta3) * gray);
    }
    return out;
}

/// I.i.d. zero-mean Gaussian per sample, row-major interleaved order.
inline RasterU8 gaussian_noise(const RasterU8& img, double sigma, Rng& rng) {
    if (sigma < 0.0)
        raise(ErrorCode::NegativeSigma, "noise sigma must be nonnegative");
    RasterU8 out = img;
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp_round_u8(img.data[i] + sigma * rng.normal());
    return out;
}

/// Isotropic Gaussian kernel normalized to unit sum.
inline RasterF gaussian_blur_kernel(int n, double sigma) {
    if (n % 2 == 0 || n <= 0)
        raise(ErrorCode::EvenSize, "kernel size must be odd and positive");
    if (sigma <= 0.0)
        raise(ErrorCode::NonPositiveSigma, "blur sigma must be positive");
    const int r = n / 2;
    RasterF k(n, n);
    double sum = 0.0;
    for (int row = -r; row <= r; ++row)
        for (int col = -r; col <= r; ++col) {
            const double v = std::exp(-0.5 * (row * row + col * col) / (sigma * sigma));
            k.at(col + r, row + r) = static_cast<float>(v);
            sum += v;
        }
    for (float& v : k.data) v = static_cast<float>(v / sum);
    return k;
}

/**
 * Directional blur kernel: the isotropic Gaussian evaluated at
 * (row * cos(theta), col * sin(theta)). theta = 0 collapses the row
 * dependence onto rows alone (columns identical); theta = pi/2 the reverse.
 */
inline RasterF motion_blur_kernel(int n, double sigma, double theta) {
    if (n % 2 == 0 || n <= 0)
        raise(ErrorCode::EvenSize, "kernel size must be odd and positive");
    if (sigma <= 0.0)
        raise(ErrorCode::NonPositiveSigma, "blur sigma must be positive");
    const int r = n / 2;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    RasterF k(n, n);
    double sum = 0.0;
    for (int row = -r; row <= r; ++row)
        for (int col = -r; col <= r; ++col) {
            const double u = row * ct;
            const double v = col * st;
            const double g = std::exp(-0.5 * (u * u + v * v) / (sigma * sigma));
            k.at(col + r, row + r) = static_cast<float>(g);
            sum += g;
        }
    for (float& v : k.data) v = static_cast<float>(v / sum);
    return k;
}

/// Convolve every channel with a dense kernel plane, re-quantizing.
inline RasterU8 convolve_channels(const RasterU8& img, const RasterF& kernel_plane) {
    Kernel k(kernel_plane.width, kernel_plane.height);
    for (std::size_t i = 0; i < k.weights.size(); ++i)
        k.weights[i] = kernel_plane.data[i];
    return per_channel(img, [&](const RasterF& p) { return convolve2d(p, k); });
}

// ---------------------------------------------------------------------------
// Moire pipeline

/**
 * Expand each pixel to a 3x3 display element: column 0 holds the red
 * subpixel, column 1 green, column 2 blue, with the bottom row dark as
 * inter-element spacing.
 */
inline RasterU8 lcd_subpixel_resample(const RasterU8& img) {
    if (img.channels != 3)
        raise(ErrorCode::ChannelMismatch, "subpixel resample expects a 3-channel image");
    RasterU8 out(img.width * 3, img.height * 3, 3, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int row = 0; row < 2; ++row) {
                out.at(3 * x + 0, 3 * y + row, 0) = img.at(x, y, 0);
                out.at(3 * x + 1, 3 * y + row, 1) = img.at(x, y, 1);
                out.at(3 * x + 2, 3 * y + row, 2) = img.at(x, y, 2);
            }
    return out;
}

/// Sample one color per photosite in the RGGB arrangement.
inline RasterU8 bayer_mosaic(const RasterU8& img) {
    if (img.channels != 3)
        raise(ErrorCode::ChannelMismatch, "bayer_mosaic expects a 3-channel image");
    if (img.width % 2 != 0 || img.height % 2 != 0)
        raise(ErrorCode::OddDimensions, "bayer_mosaic needs even dimensions");
    RasterU8 out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int c = (y % 2 == 0) ? (x % 2 == 0 ? 0 : 1) : (x % 2 == 0 ? 1 : 2);
            out.at(x, y) = img.at(x, y, c);
        }
    return out;
}

namespace detail {

/// Mean of the in-bounds mosaic samples at the given offsets.
inline double site_mean(const RasterU8& m, int x, int y,
                        const int (*offsets)[2], int count) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < count; ++i) {
        const int sx = x + offsets[i][0];
        const int sy = y + offsets[i][1];
        if (sx < 0 || sy < 0 || sx >= m.width || sy >= m.height) continue;
        sum += m.at(sx, sy);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

}  // namespace detail

/// Bilinear reconstruction of RGB from an RGGB mosaic.
inline RasterU8 demosaic_bilinear(const RasterU8& mosaic) {
    if (mosaic.channels != 1)
        raise(ErrorCode::ChannelMismatch, "demosaic expects a single-channel mosaic");
    if (mosaic.width % 2 != 0 || mosaic.height % 2 != 0)
        raise(ErrorCode::OddDimensions, "demosaic needs even dimensions");

    static const int horiz[2][2] = {{-1, 0}, {1, 0}};
    static const int vert[2][2] = {{0, -1}, {0, 1}};
    static const int diag[4][2] = {{-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
    static const int plus[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

    RasterU8 out(mosaic.width, mosaic.height, 3);
    for (int y = 0; y < mosaic.height; ++y) {
        for (int x = 0; x < mosaic.width; ++x) {
            const bool even_row = (y % 2 == 0);
            const bool even_col = (x % 2 == 0);
            double r, g, b;
            if (even_row && even_col) {  // red site
                r = mosaic.at(x, y);
                g = detail::site_mean(mosaic, x, y, plus, 4);
                b = detail::site_mean(mosaic, x, y, diag, 4);
            } else if (!even_row && !even_col) {  // blue site
                b = mosaic.at(x, y);
                g = detail::site_mean(mosaic, x, y, plus, 4);
                r = detail::site_mean(mosaic, x, y, diag, 4);
            } else if (even_row) {  // green site on a red row
                g = mosaic.at(x, y);
                r = detail::site_mean(mosaic, x, y, horiz, 2);
                b = detail::site_mean(mosaic, x, y, vert, 2);
            } else {  // green site on a blue row
                g = mosaic.at(x, y);
                r = detail::site_mean(mosaic, x, y, vert, 2);
                b = detail::site_mean(mosaic, x, y, horiz, 2);
            }
            out.at(x, y, 0) = clamp_round_u8(r);
            out.at(x, y, 1) = clamp_round_u8(g);
            out.at(x, y, 2) = clamp_round_u8(b);
        }
    }
    return out;
}

/**
 * Interference-pattern simulation: display the image as subpixel triplets,
 * view it through a random perspective, sample it through an RGGB sensor,
 * then undo the perspective and integrate back to the original resolution.
 *
 * The subpixel layout lights only 2 of the 9 samples in each block per
 * channel, and the sensor chain redistributes that energy unevenly. Sensor
 * output is therefore flat-field corrected: the same chain runs on an
 * all-white display and each block's integral is normalized by the white
 * reference, which keeps brightness unbiased and leaves only the
 * interference structure.
 */
inline RasterU8 moire(const RasterU8& img, Rng& rng, double offset, double blur_sigma) {
    if (img.channels != 3)
        raise(ErrorCode::ChannelMismatch, "moire expects a 3-channel image");
    if (img.width % 2 != 0 || img.height % 2 != 0)
        raise(ErrorCode::OddDimensions, "moire needs even dimensions");

    RasterU8 up = lcd_subpixel_resample(img);
    const Homography h = unit_to_pixels(random_perspective(rng, offset), up.width, up.height);

    const auto capture = [&](const RasterU8& display) {
        RasterU8 warped = warp_perspective(display, h, display.width, display.height);
        if (blur_sigma > 0.0)
            warped = per_channel(warped,
                                 [&](const RasterF& p) { return gaussian_blur(p, blur_sigma); });
        RasterU8 sensed = demosaic_bilinear(bayer_mosaic(warped));
        return warp_perspective(sensed, invert(h), display.width, display.height);
    };

    const RasterU8 content = capture(up);
    const RasterU8 white = capture(lcd_subpixel_resample(RasterU8(img.width, img.height, 3, 255)));

    RasterU8 out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double num = 0.0;
                double den = 0.0;
                for (int by = 0; by < 3; ++by)
                    for (int bx = 0; bx < 3; ++bx) {
                        num += content.at(3 * x + bx, 3 * y + by, c);
                        den += white.at(3 * x + bx, 3 * y + by, c);
                    }
                // Uncovered warp borders leave the reference dark; fall back
                // to the plain duty-cycle gain of 9/2 there.
                out.at(x, y, c) = den >= 1.0 ? clamp_round_u8(255.0 * num / den)
                                             : clamp_round_u8(num * 0.5);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Schedules and composition

namespace detail {

inline double ramp(long step, long ramp_steps) {
    if (ramp_steps <= 0) return 1.0;
    return std::min(1.0, static_cast<double>(step) / static_cast<double>(ramp_steps));
}

}  // namespace detail

/// Draw (theta1, theta2); the brightness interval is symmetric, the contrast
/// interval reaches further above 1 than below.
inline std::pair<double, double> sample_gamut_params(long step, const ChannelConfig& cfg, Rng& rng) {
    const double m1 = cfg.brightness_max_offset * detail::ramp(step, cfg.brightness_ramp_steps);
    const double theta2 = rng.uniform(-m1, m1);
    const double dev = cfg.contrast_max_deviation * detail::ramp(step, cfg.contrast_ramp_steps);
    const double theta1 = rng.uniform(1.0 - dev / 2.0, 1.0 + dev);
    return {theta1, theta2};
}

inline double sample_saturation_level(long step, const ChannelConfig& cfg, Rng& rng) {
    const double depth = (1.0 - cfg.saturation_min_theta3) * detail::ramp(step, cfg.saturation_ramp_steps);
    return rng.uniform(1.0 - depth, 1.0);
}

/**
 * Full channel: gamut -> saturation -> blur -> moire -> noise.
 *
 * Draw order is fixed (gamut pair, saturation level, blur branch and
 * parameters, moire gate and sub-seed, noise level and sub-seed) so a given
 * (seed, step, config, image) tuple always produces the same bytes.
 */
inline std::pair<RasterU8, DistortionTrace> apply_channel(const RasterU8& img,
                                                          const ChannelConfig& cfg, Rng& rng) {
    DistortionTrace trace;
    auto [theta1, theta2] = sample_gamut_params(cfg.step, cfg, rng);
    trace.theta1 = theta1;
    trace.theta2 = theta2;
    RasterU8 out = color_gamut(img, theta1, theta2);

    trace.theta3 = sample_saturation_level(cfg.step, cfg, rng);
    if (out.channels == 3)
        out = saturation(out, trace.theta3);

    const bool motion = rng.uniform01() < cfg.motion_blur_probability;
    if (motion && cfg.blur_max_kernel >= 3) {
        trace.blur_kind = BlurKind::Motion;
        const int half_steps = (cfg.blur_max_kernel - 3) / 2;
        trace.blur_n = 3 + 2 * rng.uniform_int(0, half_steps);
        trace.blur_sigma = rng.uniform(0.5, std::max(0.51, cfg.blur_max_sigma));
        trace.blur_theta = rng.uniform(0.0, 3.14159265358979323846);
        out = convolve_channels(out, motion_blur_kernel(trace.blur_n, trace.blur_sigma, trace.blur_theta));
    } else if (!motion) {
        // Defocus severity ramps with the schedule; early steps stay sharp.
        const double r = detail::ramp(cfg.step, cfg.blur_ramp_steps);
        const int max_n = 1 + 2 * static_cast<int>(r * (cfg.blur_max_kernel - 1) / 2);
        const int n = 1 + 2 * rng.uniform_int(0, std::max(0, (max_n - 1) / 2));
        const double sigma = rng.uniform(0.0, r * cfg.blur_max_sigma);
        if (n >= 3 && sigma > 1e-3) {
            trace.blur_kind = BlurKind::Defocus;
            trace.blur_n = n;
            trace.blur_sigma = sigma;
            out = convolve_channels(out, gaussian_blur_kernel(n, sigma));
        }
    }

    const bool moire_window = cfg.step >= cfg.total_steps / 2;
    const bool moire_drawn = rng.uniform01() < cfg.moire_probability;
    if (moire_window && moire_drawn && out.channels == 3 &&
        out.width % 2 == 0 && out.height % 2 == 0) {
        trace.moire_applied = true;
        trace.moire_seed = rng.next_u64();
        trace.moire_offset = cfg.moire_offset;
        trace.moire_blur_sigma = cfg.moire_blur_sigma;
        Rng sub(trace.moire_seed);
        out = moire(out, sub, cfg.moire_offset, cfg.moire_blur_sigma);
    }

    trace.noise_sigma = rng.uniform(0.0, cfg.noise_max_sigma * detail::ramp(cfg.step, cfg.noise_ramp_steps));
    trace.noise_seed = rng.next_u64();
    if (trace.noise_sigma > 0.0) {
        Rng sub(trace.noise_seed);
        out = gaussian_noise(out, trace.noise_sigma, sub);
    }
    return {std::move(out), trace};
}

/// Re-run a recorded channel application; byte-exact against the original.
inline RasterU8 replay_channel(const RasterU8& img, const DistortionTrace& trace) {
    RasterU8 out = color_gamut(img, trace.theta1, trace.theta2);
    if (out.channels == 3)
        out = saturation(out, trace.theta3);
    if (trace.blur_kind == BlurKind::Motion)
        out = convolve_channels(out, motion_blur_kernel(trace.blur_n, trace.blur_sigma, trace.blur_theta));
    else if (trace.blur_kind == BlurKind::Defocus)
        out = convolve_channels(out, gaussian_blur_kernel(trace.blur_n, trace.blur_sigma));
    if (trace.moire_applied) {
        Rng sub(trace.moire_seed);
        out = moire(out, sub, trace.moire_offset, trace.moire_blur_sigma);
    }
    if (trace.noise_sigma > 0.0) {
        Rng sub(trace.noise_seed);
        out = gaussian_noise(out, trace.noise_sigma, sub);
    }
    return out;
}

}  // namespace screenmark
