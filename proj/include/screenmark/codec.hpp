#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "anticrop.hpp"
#include "filter.hpp"
#include "jnd.hpp"
#include "raster.hpp"
#include "rng.hpp"

namespace screenmark {

/**
 * Keyed bank of 127 pseudo-random +-1 planes. Values are constant over 2x2
 * cells: the cell structure survives mild resampling far better than
 * per-pixel noise while the 128x128 cell grid still gives every pair of
 * patterns a correlation well under the orthogonality bound.
 */
class PatternBank {
public:
    static constexpr int kCell = 2;

    PatternBank(std::uint64_t key, int bits, int side)
        : key_(key), side_(side), cells_per_side_((side + kCell - 1) / kCell) {
        if (side < 64)
            raise(ErrorCode::ShapeMismatch, "pattern side must be at least 64");
        const std::size_t cells = static_cast<std::size_t>(cells_per_side_) * cells_per_side_;
        for (int attempt = 0; attempt < 4; ++attempt) {
            patterns_.assign(bits, std::vector<std::int8_t>(cells));
            Rng rng(derive_seed(key, 0xB4A2 + attempt));
            for (auto& plane : patterns_)
                for (auto& cell : plane)
                    cell = rng.uniform01() < 0.5 ? -1 : 1;
            if (max_pair_correlation() <= 0.05) return;
        }
        raise(ErrorCode::OrthogonalityViolation,
              "pattern bank failed the pairwise correlation bound");
    }

    int bits() const { return static_cast<int>(patterns_.size()); }
    int side() const { return side_; }
    int cells_per_side() const { return cells_per_side_; }
    std::uint64_t key() const { return key_; }

    /// Pattern value at sub-image pixel coordinates.
    int at(int index, int x, int y) const {
        return cell(index, x / kCell, y / kCell);
    }

    /// Pattern value at cell coordinates.
    int cell(int index, int cx, int cy) const {
        return patterns_[index][static_cast<std::size_t>(cy) * cells_per_side_ + cx];
    }

    /// Normalized correlation between two patterns (1.0 for i == j).
    double correlation(int i, int j) const {
        long long dot = 0;
        const auto& a = patterns_[i];
        const auto& b = patterns_[j];
        for (std::size_t k = 0; k < a.size(); ++k)
            dot += a[k] * b[k];
        return static_cast<double>(dot) / static_cast<double>(a.size());
    }

private:
    double max_pair_correlation() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < patterns_.size(); ++i)
            for (std::size_t j = i + 1; j < patterns_.size(); ++j)
                worst = std::max(worst, std::abs(correlation(static_cast<int>(i),
                                                             static_cast<int>(j))));
        return worst;
    }

    std::uint64_t key_;
    int side_;
    int cells_per_side_;
    std::vector<std::vector<std::int8_t>> patterns_;
};

inline PatternBank gen_pattern_bank(std::uint64_t key, int bits = kPayloadBits, int side = 256) {
    return PatternBank(key, bits, side);
}

struct EmbedConfig {
    double eta = 1.0;             // scale on the perceptibility bound
    double per_bit_gain = 0.35;   // gray levels per pattern before summing
    int sub_side = 256;
    double template_amplitude = 2.0;  // red-channel template std, gray levels
};

struct ExtractResult {
    BitString bits;
    std::vector<double> correlations;  // signed, summed over quadrants
};

namespace detail {

/// Stream index for deriving the red-channel template seed from the key.
inline constexpr std::uint64_t kTemplateStream = 0x7E31;

inline SymmetricTemplate template_for_key(std::uint64_t key, int width, int height,
                                          double amplitude) {
    Rng rng(derive_seed(key, kTemplateStream));
    return make_symmetric_template(rng, width, height, amplitude);
}

/// Summed high-pass residual of G and B, folded to the pattern cell grid.
inline RasterF cell_residual(const RasterU8& sub, int cells_per_side) {
    RasterF fold(cells_per_side, cells_per_side, 0.0f);
    for (int c = 1; c <= 2; ++c) {
        RasterF plane = channel_plane(sub, c);
        RasterF smooth = box_filter(plane, 3);
        for (int y = 0; y < sub.height; ++y)
            for (int x = 0; x < sub.width; ++x)
                fold.at(x / PatternBank::kCell, y / PatternBank::kCell) +=
                    plane.at(x, y) - smooth.at(x, y);
    }
    return fold;
}

/// Normalized correlation of the folded residual against every pattern.
inline std::vector<double> pattern_correlations(const RasterF& fold, const PatternBank& bank) {
    double energy = 0.0;
    for (float v : fold.data)
        energy += static_cast<double>(v) * v;
    const double norm = std::sqrt(energy * fold.data.size());

    std::vector<double> corr(bank.bits(), 0.0);
    if (norm <= 0.0) return corr;
    for (int i = 0; i < bank.bits(); ++i) {
        double dot = 0.0;
        std::size_t k = 0;
        for (int cy = 0; cy < fold.height; ++cy)
            for (int cx = 0; cx < fold.width; ++cx, ++k)
                dot += fold.data[k] * bank.cell(i, cx, cy);
        corr[i] = dot / norm;
    }
    return corr;
}

}  // namespace detail

/**
 * Embed a 127-bit payload. The payload's signed pattern sum is clipped
 * per-pixel to the scaled perceptibility threshold, added to the G and B
 * channels of all four quadrants, and the keyed symmetric template is added
 * to R across the full frame.
 */
inline RasterU8 embed(const RasterU8& host, const BitString& payload, std::uint64_t key,
                      const RasterF& jnd, const EmbedConfig& cfg = {}) {
    const int s = cfg.sub_side;
    if (host.channels != 3 || host.width != 2 * s || host.height != 2 * s)
        raise(ErrorCode::ShapeMismatch, "host must be 3-channel at twice the sub-image side");
    if (jnd.width != host.width || jnd.height != host.height)
        raise(ErrorCode::ShapeMismatch, "perceptibility map must match the host");
    if (static_cast<int>(payload.size()) != kPayloadBits)
        raise(ErrorCode::PayloadLengthMismatch, "payload must be exactly 127 bits");
    if (cfg.eta <= 0.0)
        raise(ErrorCode::OutOfRange, "eta must be positive");

    const PatternBank bank = gen_pattern_bank(key, kPayloadBits, s);

    // Signed pattern sum on the cell grid, then per-pixel clip per quadrant.
    const int cs = bank.cells_per_side();
    RasterF raw(cs, cs, 0.0f);
    for (int i = 0; i < kPayloadBits; ++i) {
        const double sign = payload[i] ? 1.0 : -1.0;
        std::size_t k = 0;
        for (int cy = 0; cy < cs; ++cy)
            for (int cx = 0; cx < cs; ++cx, ++k)
                raw.data[k] += static_cast<float>(sign * bank.cell(i, cx, cy));
    }
    for (float& v : raw.data) v = static_cast<float>(v * cfg.per_bit_gain);

    const SymmetricTemplate tmpl =
        detail::template_for_key(key, host.width, host.height, cfg.template_amplitude);

    RasterU8 out = host;
    for (int y = 0; y < host.height; ++y)
        for (int x = 0; x < host.width; ++x) {
            const double bound = cfg.eta * jnd.at(x, y);
            const double r = std::clamp(
                static_cast<double>(raw.at((x % s) / PatternBank::kCell,
                                           (y % s) / PatternBank::kCell)),
                -bound, bound);
            out.at(x, y, 0) = clamp_round_u8(host.at(x, y, 0) + tmpl.plane.at(x, y));
            out.at(x, y, 1) = clamp_round_u8(host.at(x, y, 1) + r);
            out.at(x, y, 2) = clamp_round_u8(host.at(x, y, 2) + r);
        }
    return out;
}

/**
 * Correlation decode. Accepts the full rectified frame (all four quadrants,
 * scanned top-left, top-right, bottom-left, bottom-right) or one sub-image.
 * Bit i is the sign of the correlation sum; its magnitude is the confidence.
 */
inline ExtractResult extract(const RasterU8& rectified, std::uint64_t key,
                             const EmbedConfig& cfg = {}) {
    const int s = cfg.sub_side;
    const bool full = rectified.width == 2 * s && rectified.height == 2 * s;
    const bool single = rectified.width == s && rectified.height == s;
    if (rectified.channels != 3 || (!full && !single))
        raise(ErrorCode::ShapeMismatch,
              "extract input must be 3-channel at the sub-image side or twice it");

    const PatternBank bank = gen_pattern_bank(key, kPayloadBits, s);

    ExtractResult result;
    result.correlations.assign(kPayloadBits, 0.0);

    const int quads = full ? 4 : 1;
    for (int q = 0; q < quads; ++q) {
        const int ox = full ? (q % 2) * s : 0;
        const int oy = full ? (q / 2) * s : 0;
        RasterU8 sub(s, s, 3);
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                for (int c = 0; c < 3; ++c)
                    sub.at(x, y, c) = rectified.at(ox + x, oy + y, c);
        const RasterF fold = detail::cell_residual(sub, bank.cells_per_side());
        const std::vector<double> corr = detail::pattern_correlations(fold, bank);
        for (int i = 0; i < kPayloadBits; ++i)
            result.correlations[i] += corr[i];
    }

    result.bits = BitString(kPayloadBits);
    for (int i = 0; i < kPayloadBits; ++i)
        result.bits[i] = result.correlations[i] > 0.0 ? 1 : 0;
    return result;
}

struct AnticropDecode {
    BitString bits;
    std::vector<double> correlations;
    CropBounds bounds;
};

/**
 * Decode a digitally cropped image: find the template's symmetry axes,
 * extract every complete sub-image they imply, and fuse the per-bit
 * correlations across candidates so stronger quadrants dominate.
 */
inline AnticropDecode decode_with_anticrop(const RasterU8& cropped, std::uint64_t key,
                                           const EmbedConfig& cfg = {},
                                           double confidence_floor = 0.01) {
    AnticropDecode result;
    result.bounds = recover_subimages(cropped, cfg.sub_side);
    result.correlations.assign(kPayloadBits, 0.0);

    double best_mean = 0.0;
    for (const SubImageRect& rect : result.bounds.rects) {
        RasterU8 sub(rect.side, rect.side, 3);
        for (int y = 0; y < rect.side; ++y)
            for (int x = 0; x < rect.side; ++x)
                for (int c = 0; c < 3; ++c)
                    sub.at(x, y, c) = cropped.at(rect.x + x, rect.y + y, c);
        ExtractResult one = extract(sub, key, cfg);
        double mean_abs = 0.0;
        for (int i = 0; i < kPayloadBits; ++i) {
            result.correlations[i] += one.correlations[i];
            mean_abs += std::abs(one.correlations[i]);
        }
        best_mean = std::max(best_mean, mean_abs / kPayloadBits);
    }
    if (result.bounds.rects.empty() || best_mean < confidence_floor)
        raise(ErrorCode::DecodeFailed, "no candidate sub-image carried a usable signal");

    result.bits = BitString(kPayloadBits);
    for (int i = 0; i < kPayloadBits; ++i)
        result.bits[i] = result.correlations[i] > 0.0 ? 1 : 0;
    return result;
}

}  // namespace screenmark
