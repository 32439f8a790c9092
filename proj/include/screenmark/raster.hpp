#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace screenmark {

enum class ErrorCode {
    ChannelMismatch,
    ShapeMismatch,
    LengthMismatch,
    ImageTooSmall,
    EvenKernel,
    EvenWindow,
    EvenSize,
    EvenBlock,
    OddDimensions,
    OutOfRange,
    NonPositiveContrast,
    NegativeSigma,
    NonPositiveSigma,
    SingularTransform,
    DegenerateQuad,
    SingularSystem,
    NonConvex,
    EmptyMask,
    BadThresholds,
    TooFewPoints,
    TooNarrow,
    ZeroVariance,
    LocalizationFailed,
    NoSymmetryFound,
    DecodeFailed,
    PayloadLengthMismatch,
    OrthogonalityViolation,
    IoError,
    ParseError,
};

inline const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ChannelMismatch: return "ChannelMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::EvenKernel: return "EvenKernel";
        case ErrorCode::EvenWindow: return "EvenWindow";
        case ErrorCode::EvenSize: return "EvenSize";
        case ErrorCode::EvenBlock: return "EvenBlock";
        case ErrorCode::OddDimensions: return "OddDimensions";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NonPositiveContrast: return "NonPositiveContrast";
        case ErrorCode::NegativeSigma: return "NegativeSigma";
        case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
        case ErrorCode::SingularTransform: return "SingularTransform";
        case ErrorCode::DegenerateQuad: return "DegenerateQuad";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NonConvex: return "NonConvex";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::BadThresholds: return "BadThresholds";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::TooNarrow: return "TooNarrow";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::LocalizationFailed: return "LocalizationFailed";
        case ErrorCode::NoSymmetryFound: return "NoSymmetryFound";
        case ErrorCode::DecodeFailed: return "DecodeFailed";
        case ErrorCode::PayloadLengthMismatch: return "PayloadLengthMismatch";
        case ErrorCode::OrthogonalityViolation: return "OrthogonalityViolation";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

/// Float -> u8 conversion used everywhere: round half away from zero, clamp to [0,255].
inline std::uint8_t clamp_round_u8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

/**
 * Interleaved 8-bit raster, row-major, 1 (gray) or 3 (RGB) channels.
 *
 * Pixel (x, y) with x = column, y = row lives at data[(y*width + x)*channels + c].
 */
struct RasterU8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    RasterU8() = default;

    RasterU8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(checked_size(w, h, c), fill) {}

    static std::size_t checked_size(int w, int h, int c) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            raise(ErrorCode::ShapeMismatch, "raster dimensions must be positive with 1 or 3 channels");
        return static_cast<std::size_t>(w) * h * c;
    }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }

    std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }

    bool same_shape(const RasterU8& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }

    std::size_t samples() const { return data.size(); }
};

/// Single-plane float raster (working plane for kernels, residuals, thresholds).
struct RasterF {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    RasterF() = default;

    RasterF(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(checked_size(w, h), fill) {}

    static std::size_t checked_size(int w, int h) {
        if (w <= 0 || h <= 0)
            raise(ErrorCode::ShapeMismatch, "plane dimensions must be positive");
        return static_cast<std::size_t>(w) * h;
    }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    float at(int x, int y) const { return data[index(x, y)]; }
    float& at(int x, int y) { return data[index(x, y)]; }

    bool same_shape(const RasterF& other) const {
        return width == other.width && height == other.height;
    }
};

/// Ordered bit sequence; payloads in this artifact are 127 bits.
struct BitString {
    std::vector<std::uint8_t> bits;  // each 0 or 1

    BitString() = default;
    explicit BitString(std::size_t n, std::uint8_t fill = 0) : bits(n, fill & 1) {}

    std::size_t size() const { return bits.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits[i]; }
    std::uint8_t& operator[](std::size_t i) { return bits[i]; }
    bool operator==(const BitString& other) const { return bits == other.bits; }
};

inline constexpr int kPayloadBits = 127;

// ---------------------------------------------------------------------------
// Color conversion

/// Luma weights shared by grayscale conversion and saturation blending.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Rectangular sub-raster copy; the window must lie fully inside the image.
inline RasterU8 crop(const RasterU8& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width || y0 + h > img.height)
        raise(ErrorCode::OutOfRange, "crop window exceeds the image bounds");
    RasterU8 out(w, h, img.channels);
    for (int y = 0; y < h; ++y) {
        const std::size_t src = img.index(x0, y0 + y);
        const std::size_t dst = out.index(0, y);
        std::copy_n(img.data.begin() + src, static_cast<std::size_t>(w) * img.channels,
                    out.data.begin() + dst);
    }
    return out;
}

inline double luma(double r, double g, double b) {
    return kLumaR * r + kLumaG * g + kLumaB * b;
}

inline RasterU8 to_grayscale(const RasterU8& img) {
    if (img.channels != 3)
        raise(ErrorCode::ChannelMismatch, "to_grayscale expects a 3-channel image");
    RasterU8 out(img.width, img.height, 1);
    const std::uint8_t* src = img.data.data();
    for (std::size_t i = 0, n = out.data.size(); i < n; ++i) {
        const std::uint8_t* p = src + i * 3;
        out.data[i] = clamp_round_u8(luma(p[0], p[1], p[2]));
    }
    return out;
}

/// Unrounded luma plane; used where later stages need the pre-quantization value.
inline RasterF gray_plane(const RasterU8& img) {
    RasterF out(img.width, img.height);
    if (img.channels == 1) {
        for (std::size_t i = 0; i < img.data.size(); ++i)
            out.data[i] = static_cast<float>(img.data[i]);
    } else {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const std::uint8_t* p = img.data.data() + i * 3;
            out.data[i] = static_cast<float>(luma(p[0], p[1], p[2]));
        }
    }
    return out;
}

/// One channel of an interleaved raster as a float plane.
inline RasterF channel_plane(const RasterU8& img, int c) {
    RasterF out(img.width, img.height);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(img.data[i * img.channels + c]);
    return out;
}

}  // namespace screenmark
