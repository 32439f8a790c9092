#pragma once

#include <cmath>
#include <cstdint>

#include "screenmark/filter.hpp"
#include "screenmark/geometry.hpp"
#include "screenmark/raster.hpp"
#include "screenmark/rng.hpp"

namespace screenmark {

// ---------------------------------------------------------------------------
// Synthetic imagery. The bundled corpus is generated, not shipped: texture i
// is a pure function of its seed, so every run and every machine sees the
// same bytes. Recipes aim for photographs' gross statistics (mid-gray mean,
// smooth shading, some band-limited detail) without any file dependencies.

namespace detail {

inline constexpr std::uint64_t kTextureStream = 0x7e57;

}  // namespace detail

/**
 * Deterministic color texture: per channel, two low-frequency wave products
 * plus softened noise about mid-gray. Values stay inside [8, 247] so both
 * watermark residuals and channel distortions have headroom before clipping.
 */
inline RasterU8 synth_texture(std::uint64_t seed, int width = 512, int height = 512) {
    if (width < 1 || height < 1)
        throw Error(ErrorCode::ShapeMismatch, "synth_texture: empty output requested");
    Rng rng(derive_seed(seed, detail::kTextureStream));

    const double f1x = rng.uniform(0.015, 0.045);
    const double f1y = rng.uniform(0.015, 0.045);
    const double f2 = rng.uniform(0.008, 0.020);
    double phase[3][3];
    for (auto& ch : phase)
        for (double& p : ch) p = rng.uniform(0.0, 6.283185307179586);
    const double amp1 = rng.uniform(42.0, 58.0);
    const double amp2 = rng.uniform(14.0, 22.0);

    // Band-limited luminance detail shared by all three channels.
    RasterF noise(width, height, 1);
    for (float& v : noise.data) v = static_cast<float>(rng.normal());
    noise = gaussian_blur(noise, 1.2);
    double noise_rms = 0.0;
    for (float v : noise.data) noise_rms += static_cast<double>(v) * v;
    noise_rms = std::sqrt(noise_rms / static_cast<double>(noise.data.size()));
    const double noise_gain = noise_rms > 0.0 ? 7.0 / noise_rms : 0.0;

    RasterU8 img(width, height, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double n = noise_gain * noise.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = 128.0 +
                                 amp1 * std::sin(f1x * x + phase[c][0]) *
                                     std::cos(f1y * y + phase[c][1]) +
                                 amp2 * std::sin(f2 * (x + y) + phase[c][2]) + n;
                img.at(x, y, c) = clamp_round_u8(std::clamp(v, 8.0, 247.0));
            }
        }
    }
    return img;
}

/// A pasted view of a source image together with where its corners landed.
struct Capture {
    RasterU8 image;
    Quad truth;  // pixel-center corner positions, clockwise from top-left
    std::uint8_t background = 0;
};

/**
 * Simulate photographing `src` against a uniform dark surface: jitter the
 * corners by up to `max_jitter` of the side length, center the quad on a
 * square canvas, and composite with bilinear resampling.
 */
inline Capture synth_capture(const RasterU8& src, Rng& rng, int canvas_side = 800,
                             double max_jitter = 0.08) {
    if (src.channels != 3)
        throw Error(ErrorCode::ChannelMismatch, "synth_capture: source must be 3-channel");
    if (canvas_side < src.width + 32 || canvas_side < src.height + 32)
        throw Error(ErrorCode::ShapeMismatch, "synth_capture: canvas too small for the paste");

    Capture cap;
    cap.background = static_cast<std::uint8_t>(rng.uniform_int(15, 70));

    const Homography px = unit_to_pixels(random_perspective(rng, max_jitter), src.width, src.height);
    const double margin_x = (canvas_side - src.width) / 2.0;
    const double margin_y = (canvas_side - src.height) / 2.0;
    const Quad src_quad{{Point{0.0, 0.0}, Point{src.width - 1.0, 0.0},
                         Point{src.width - 1.0, src.height - 1.0}, Point{0.0, src.height - 1.0}}};
    for (int i = 0; i < 4; ++i) {
        const Point p = px.map(src_quad.corners[i]);
        cap.truth.corners[i] = {p.x + margin_x, p.y + margin_y};
    }

    const Homography h = homography_from_quads(src_quad, cap.truth);
    WarpResult warped = warp_perspective_masked(src, h, canvas_side, canvas_side);
    cap.image = RasterU8(canvas_side, canvas_side, 3, cap.background);
    for (int y = 0; y < canvas_side; ++y)
        for (int x = 0; x < canvas_side; ++x)
            if (warped.coverage.at(x, y))
                for (int c = 0; c < 3; ++c)
                    cap.image.at(x, y, c) = warped.image.at(x, y, c);
    return cap;
}

}  // namespace screenmark
