#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "raster.hpp"
#include "rng.hpp"

namespace screenmark {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// 2x3 affine map: x' = a·x + b·y + c, y' = d·x + e·y + f.
struct AffineParams {
    double a = 1.0, b = 0.0, c = 0.0;
    double d = 0.0, e = 1.0, f = 0.0;

    double det() const { return a * e - b * d; }
};

/// Row-major 3x3 projective map, normalized so h[8] = 1 where possible.
struct Homography {
    std::array<double, 9> h = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }

    Point map(const Point& p) const {
        const double w = h[6] * p.x + h[7] * p.y + h[8];
        if (std::abs(w) < 1e-12)
            raise(ErrorCode::SingularTransform, "point maps to infinity");
        return Point{(h[0] * p.x + h[1] * p.y + h[2]) / w,
                     (h[3] * p.x + h[4] * p.y + h[5]) / w};
    }

    double det() const {
        return h[0] * (h[4] * h[8] - h[5] * h[7]) -
               h[1] * (h[3] * h[8] - h[5] * h[6]) +
               h[2] * (h[3] * h[7] - h[4] * h[6]);
    }
};

inline Homography compose(const Homography& second, const Homography& first) {
    Homography out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k)
                acc += second.h[r * 3 + k] * first.h[k * 3 + c];
            out.h[r * 3 + c] = acc;
        }
    if (std::abs(out.h[8]) > 1e-12) {
        const double inv = 1.0 / out.h[8];
        for (double& v : out.h) v *= inv;
    }
    return out;
}

inline Homography invert(const Homography& h) {
    const double d = h.det();
    if (std::abs(d) < 1e-12)
        raise(ErrorCode::SingularTransform, "homography is not invertible");
    const auto& m = h.h;
    Homography out;
    out.h = {
        (m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d, (m[1] * m[5] - m[2] * m[4]) / d,
        (m[5] * m[6] - m[3] * m[8]) / d, (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
        (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d, (m[0] * m[4] - m[1] * m[3]) / d,
    };
    if (std::abs(out.h[8]) > 1e-12) {
        const double inv = 1.0 / out.h[8];
        for (double& v : out.h) v *= inv;
    }
    return out;
}

/// Four corners in clockwise order starting top-left (y grows downward).
struct Quad {
    std::array<Point, 4> corners;
};

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Strict convexity with consistent winding.
inline bool convex(const Quad& q) {
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
        const double c = cross(q.corners[i], q.corners[(i + 1) % 4], q.corners[(i + 2) % 4]);
        if (std::abs(c) < 1e-12) return false;
        const int s = c > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

inline double bilinear_sample(const RasterU8& img, double x, double y, int c) {
    if (x < 0.0 || y < 0.0 || x > img.width - 1 || y > img.height - 1)
        return 0.0;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    return (1.0 - fy) * top + fy * bot;
}

/// Gaussian elimination with partial pivoting on an n x (n+1) augmented system.
template <int N>
inline std::array<double, N> solve_linear(std::array<std::array<double, N + 1>, N>& m) {
    for (int col = 0; col < N; ++col) {
        int pivot = col;
        for (int r = col + 1; r < N; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-12)
            raise(ErrorCode::SingularSystem, "homography system is rank-deficient");
        std::swap(m[col], m[pivot]);
        for (int r = col + 1; r < N; ++r) {
            const double factor = m[r][col] / m[col][col];
            for (int c = col; c <= N; ++c)
                m[r][c] -= factor * m[col][c];
        }
    }
    std::array<double, N> x{};
    for (int r = N - 1; r >= 0; --r) {
        double acc = m[r][N];
        for (int c = r + 1; c < N; ++c)
            acc -= m[r][c] * x[c];
        x[r] = acc / m[r][r];
    }
    return x;
}

struct Conditioning {
    double scale = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    Point forward(const Point& p) const { return Point{(p.x - cx) * scale, (p.y - cy) * scale}; }
};

inline Conditioning condition_points(const std::array<Point, 4>& pts) {
    Conditioning c;
    for (const Point& p : pts) {
        c.cx += p.x;
        c.cy += p.y;
    }
    c.cx /= 4.0;
    c.cy /= 4.0;
    double mean_dist = 0.0;
    for (const Point& p : pts)
        mean_dist += std::hypot(p.x - c.cx, p.y - c.cy);
    mean_dist /= 4.0;
    c.scale = (mean_dist > 1e-12) ? std::sqrt(2.0) / mean_dist : 1.0;
    return c;
}

}  // namespace detail

/// Warp with inverse mapping and bilinear sampling; uncovered pixels are black.
inline RasterU8 apply_affine(const RasterU8& img, const AffineParams& params) {
    if (std::abs(params.det()) < 1e-12)
        raise(ErrorCode::SingularTransform, "affine map is not invertible");
    const double inv_det = 1.0 / params.det();
    // Inverse of [a b; d e] with translation (c, f).
    const double ia = params.e * inv_det;
    const double ib = -params.b * inv_det;
    const double id = -params.d * inv_det;
    const double ie = params.a * inv_det;

    RasterU8 out(img.width, img.height, img.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double dx = x - params.c;
            const double dy = y - params.f;
            const double sx = ia * dx + ib * dy;
            const double sy = id * dx + ie * dy;
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = clamp_round_u8(detail::bilinear_sample(img, sx, sy, c));
        }
    }
    return out;
}

/**
 * Direct linear transform from four point correspondences, with Hartley
 * point conditioning for numerical stability.
 */
inline Homography homography_from_quads(const Quad& src, const Quad& dst) {
    if (!detail::convex(src) || !detail::convex(dst))
        raise(ErrorCode::DegenerateQuad, "quads must be strictly convex");

    const detail::Conditioning cs = detail::condition_points(src.corners);
    const detail::Conditioning cd = detail::condition_points(dst.corners);

    std::array<std::array<double, 9>, 8> sys{};
    for (int i = 0; i < 4; ++i) {
        const Point s = cs.forward(src.corners[i]);
        const Point d = cd.forward(dst.corners[i]);
        sys[2 * i] = {s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, d.x};
        sys[2 * i + 1] = {0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y, d.y};
    }
    std::array<double, 8> sol = detail::solve_linear<8>(sys);

    Homography n;
    n.h = {sol[0], sol[1], sol[2], sol[3], sol[4], sol[5], sol[6], sol[7], 1.0};

    // Undo conditioning: H = T_dst^-1 * N * T_src.
    Homography t_src;
    t_src.h = {cs.scale, 0, -cs.scale * cs.cx, 0, cs.scale, -cs.scale * cs.cy, 0, 0, 1};
    Homography t_dst_inv;
    t_dst_inv.h = {1.0 / cd.scale, 0, cd.cx, 0, 1.0 / cd.scale, cd.cy, 0, 0, 1};

    Homography h = compose(t_dst_inv, compose(n, t_src));
    if (std::abs(h.det()) < 1e-12)
        raise(ErrorCode::SingularSystem, "estimated homography is singular");
    return h;
}

struct WarpResult {
    RasterU8 image;
    RasterU8 coverage;  // 1 where the inverse map landed inside the source
};

/// Inverse-mapped bilinear warp into an out-size canvas, with coverage mask.
inline WarpResult warp_perspective_masked(const RasterU8& img, const Homography& h,
                                          int out_w, int out_h) {
    if (std::abs(h.det()) < 1e-12)
        raise(ErrorCode::SingularTransform, "homography is not invertible");
    const Homography inv = invert(h);
    WarpResult result{RasterU8(out_w, out_h, img.channels), RasterU8(out_w, out_h, 1)};
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double w = inv.h[6] * x + inv.h[7] * y + inv.h[8];
            if (std::abs(w) < 1e-12) continue;
            const double sx = (inv.h[0] * x + inv.h[1] * y + inv.h[2]) / w;
            const double sy = (inv.h[3] * x + inv.h[4] * y + inv.h[5]) / w;
            if (sx < 0.0 || sy < 0.0 || sx > img.width - 1 || sy > img.height - 1)
                continue;
            result.coverage.at(x, y) = 1;
            for (int c = 0; c < img.channels; ++c)
                result.image.at(x, y, c) = clamp_round_u8(detail::bilinear_sample(img, sx, sy, c));
        }
    }
    return result;
}

inline RasterU8 warp_perspective(const RasterU8& img, const Homography& h, int out_w, int out_h) {
    return warp_perspective_masked(img, h, out_w, out_h).image;
}

/**
 * Homography mapping the unit square to a randomly jittered quad; each corner
 * moves by at most max_corner_offset per axis. Deterministic given the rng
 * state; re-samples in the (measure-zero) degenerate case.
 */
inline Homography random_perspective(Rng& rng, double max_corner_offset) {
    if (max_corner_offset < 0.0 || max_corner_offset > 0.2)
        raise(ErrorCode::OutOfRange, "corner offset fraction must be in [0, 0.2]");
    const Quad unit{{Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}}};
    if (max_corner_offset == 0.0)
        return Homography::identity();
    for (int attempt = 0; attempt < 64; ++attempt) {
        Quad jittered = unit;
        for (Point& p : jittered.corners) {
            p.x += rng.uniform(-max_corner_offset, max_corner_offset);
            p.y += rng.uniform(-max_corner_offset, max_corner_offset);
        }
        if (!detail::convex(jittered)) continue;
        return homography_from_quads(unit, jittered);
    }
    return Homography::identity();
}

/// Scale a unit-square homography to pixel coordinates of a w x h image.
inline Homography unit_to_pixels(const Homography& unit_h, int w, int h) {
    Homography to_unit;
    to_unit.h = {1.0 / w, 0, 0, 0, 1.0 / h, 0, 0, 0, 1};
    Homography to_pixels;
    to_pixels.h = {static_cast<double>(w), 0, 0, 0, static_cast<double>(h), 0, 0, 0, 1};
    return compose(to_pixels, compose(unit_h, to_unit));
}

}  // namespace screenmark
