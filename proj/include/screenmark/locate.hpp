#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "filter.hpp"
#include "geometry.hpp"
#include "raster.hpp"
#include "rng.hpp"

namespace screenmark {

/// Single-channel plane holding only 0 and 1.
using Mask = RasterU8;

/// Line in normal form: x·cos(theta) + y·sin(theta) = rho, theta in [0, pi).
struct LineParams {
    double rho = 0.0;
    double theta = 0.0;
};

inline constexpr int kRectifiedSide = 512;

struct LocateResult {
    Quad quad;
    RasterU8 rectified;
    std::optional<double> recall_estimate;
};

// ---------------------------------------------------------------------------
// Foreground segmentation

/// Pixel = 1 iff value > (mean over the centered block, clipped at borders)
/// minus offset. A negative offset therefore demands the pixel to exceed its
/// neighborhood, which zeroes out constant regions.
inline Mask adaptive_threshold(const RasterU8& gray, int block, double offset) {
    if (gray.channels != 1)
        raise(ErrorCode::ChannelMismatch, "adaptive_threshold expects a single channel");
    if (block < 3 || block % 2 == 0)
        raise(ErrorCode::EvenBlock, "block must be odd and at least 3");

    const int w = gray.width;
    const int h = gray.height;
    std::vector<std::uint64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        std::uint64_t row = 0;
        for (int x = 0; x < w; ++x) {
            row += gray.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
                integral[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
        }
    }
    const auto box_sum = [&](int x0, int y0, int x1, int y1) {
        return integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + x1 + 1] -
               integral[static_cast<std::size_t>(y0) * (w + 1) + x1 + 1] -
               integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
               integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
    };

    const int half = block / 2;
    Mask out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - half);
            const int y0 = std::max(0, y - half);
            const int x1 = std::min(w - 1, x + half);
            const int y1 = std::min(h - 1, y + half);
            const double area = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
            const double mean = static_cast<double>(box_sum(x0, y0, x1, y1)) / area;
            out.at(x, y) = gray.at(x, y) > mean - offset ? 1 : 0;
        }
    return out;
}

/// Keep only the largest 8-connected foreground component. Ties go to the
/// component met first in row-major order.
inline Mask largest_component(const Mask& mask) {
    if (mask.channels != 1)
        raise(ErrorCode::ChannelMismatch, "largest_component expects a single channel");
    const int w = mask.width;
    const int h = mask.height;

    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::int64_t> areas;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
            const std::int32_t id = static_cast<std::int32_t>(areas.size());
            std::int64_t area = 0;
            stack.push_back({x, y});
            label[static_cast<std::size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++area;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        std::int32_t& l = label[static_cast<std::size_t>(ny) * w + nx];
                        if (mask.at(nx, ny) && l < 0) {
                            l = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            areas.push_back(area);
        }
    if (areas.empty())
        raise(ErrorCode::EmptyMask, "mask has no foreground pixel");

    std::int32_t best = 0;
    for (std::size_t i = 1; i < areas.size(); ++i)
        if (areas[i] > areas[best]) best = static_cast<std::int32_t>(i);

    Mask out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = label[static_cast<std::size_t>(y) * w + x] == best ? 1 : 0;
    return out;
}

namespace detail {

inline const std::vector<std::pair<int, int>>& disk5_offsets() {
    static const std::vector<std::pair<int, int>> offsets = [] {
        std::vector<std::pair<int, int>> v;
        for (int dy = -5; dy <= 5; ++dy)
            for (int dx = -5; dx <= 5; ++dx)
                if (dx * dx + dy * dy <= 25) v.push_back({dx, dy});
        return v;
    }();
    return offsets;
}

inline Mask dilate_disk5(const Mask& mask) {
    Mask out(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (auto [dx, dy] : disk5_offsets()) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height)
                    out.at(nx, ny) = 1;
            }
        }
    return out;
}

/// Erosion treating everything outside the image as foreground, so shapes
/// flush with the border are not eaten from the outside.
inline Mask erode_disk5(const Mask& mask) {
    Mask out(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            std::uint8_t keep = 1;
            for (auto [dx, dy] : disk5_offsets()) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                if (!mask.at(nx, ny)) {
                    keep = 0;
                    break;
                }
            }
            out.at(x, y) = keep;
        }
    return out;
}

inline Mask fill_holes(const Mask& mask) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
    std::vector<std::pair<int, int>> stack;
    const auto push = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        std::uint8_t& o = outside[static_cast<std::size_t>(y) * w + x];
        if (!o && !mask.at(x, y)) {
            o = 1;
            stack.push_back({x, y});
        }
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        push(x - 1, y);
        push(x + 1, y);
        push(x, y - 1);
        push(x, y + 1);
    }
    Mask out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = mask.at(x, y) || !outside[static_cast<std::size_t>(y) * w + x] ? 1 : 0;
    return out;
}

}  // namespace detail

/// Morphological closing (disk radius 5) followed by border flood-fill hole
/// filling; stands in for the learned mask completion on uniform backgrounds.
inline Mask refine_mask(const Mask& mask) {
    if (mask.channels != 1)
        raise(ErrorCode::ChannelMismatch, "refine_mask expects a single channel");
    if (std::find(mask.data.begin(), mask.data.end(), 1) == mask.data.end())
        raise(ErrorCode::EmptyMask, "mask has no foreground pixel");
    return detail::fill_holes(detail::erode_disk5(detail::dilate_disk5(mask)));
}

// ---------------------------------------------------------------------------
// Edges and lines

inline Mask canny(const RasterU8& gray, double low, double high) {
    if (gray.channels != 1)
        raise(ErrorCode::ChannelMismatch, "canny expects a single channel");
    if (low <= 0.0 || low >= high)
        raise(ErrorCode::BadThresholds, "thresholds must satisfy 0 < low < high");

    const int w = gray.width;
    const int h = gray.height;
    RasterF plane(w, h);
    for (std::size_t i = 0; i < plane.data.size(); ++i)
        plane.data[i] = static_cast<float>(gray.data[i]);
    plane = gaussian_blur(plane, 1.4);

    Kernel sobel_x(3, 3);
    sobel_x.weights = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
    Kernel sobel_y(3, 3);
    sobel_y.weights = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
    const RasterF gx = convolve2d(plane, sobel_x);
    const RasterF gy = convolve2d(plane, sobel_y);

    RasterF mag(w, h);
    for (std::size_t i = 0; i < mag.data.size(); ++i)
        mag.data[i] = static_cast<float>(
            std::hypot(static_cast<double>(gx.data[i]), static_cast<double>(gy.data[i])));

    // Non-maximum suppression along one of four quantized gradient directions.
    Mask thin(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double m = mag.at(x, y);
            if (m < low) continue;
            const double angle = std::atan2(gy.at(x, y), gx.at(x, y));
            double d = std::fmod(angle + std::numbers::pi, std::numbers::pi);
            int dx = 1, dy = 0;
            if (d >= std::numbers::pi / 8 && d < 3 * std::numbers::pi / 8) {
                dx = 1;
                dy = 1;
            } else if (d >= 3 * std::numbers::pi / 8 && d < 5 * std::numbers::pi / 8) {
                dx = 0;
                dy = 1;
            } else if (d >= 5 * std::numbers::pi / 8 && d < 7 * std::numbers::pi / 8) {
                dx = -1;
                dy = 1;
            }
            const auto sample = [&](int sx, int sy) {
                sx = clamp_index(sx, 0, w - 1);
                sy = clamp_index(sy, 0, h - 1);
                return static_cast<double>(mag.at(sx, sy));
            };
            if (m >= sample(x + dx, y + dy) && m >= sample(x - dx, y - dy))
                thin.at(x, y) = 1;
        }

    // Hysteresis: grow from strong pixels through weak ones, 8-connected.
    Mask out(w, h, 1);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (thin.at(x, y) && mag.at(x, y) >= high && !out.at(x, y)) {
                out.at(x, y) = 1;
                stack.push_back({x, y});
                while (!stack.empty()) {
                    auto [cx, cy] = stack.back();
                    stack.pop_back();
                    for (int ny = cy - 1; ny <= cy + 1; ++ny)
                        for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            if (thin.at(nx, ny) && !out.at(nx, ny)) {
                                out.at(nx, ny) = 1;
                                stack.push_back({nx, ny});
                            }
                        }
                }
            }
    return out;
}

namespace detail {

/// Accumulator geometry shared by voting, peak finding, and suppression.
struct HoughGrid {
    int n_theta = 0;
    int n_rho = 0;
    int rho_center = 0;
    double rho_res = 0.0;
    double theta_res = 0.0;
};

}  // namespace detail

/**
 * Straight-line Hough transform. Peaks are accumulator local maxima whose
 * votes, summed over a three-cell rho band, reach min_votes; they come back
 * strongest first after suppressing weaker peaks within three cells in both
 * rho and theta (theta wraps with rho negated).
 */
inline std::vector<LineParams> hough_lines(const Mask& edges, double rho_res, double theta_res,
                                           double min_votes) {
    if (edges.channels != 1)
        raise(ErrorCode::ChannelMismatch, "hough_lines expects a single channel");
    if (rho_res <= 0.0 || theta_res <= 0.0)
        raise(ErrorCode::OutOfRange, "resolutions must be positive");

    detail::HoughGrid grid;
    grid.rho_res = rho_res;
    grid.theta_res = theta_res;
    grid.n_theta = std::max(1, static_cast<int>(std::lround(std::numbers::pi / theta_res)));
    grid.rho_center =
        static_cast<int>(std::ceil(std::hypot(edges.width, edges.height) / rho_res)) + 1;
    grid.n_rho = 2 * grid.rho_center + 1;

    std::vector<double> cos_t(grid.n_theta), sin_t(grid.n_theta);
    for (int t = 0; t < grid.n_theta; ++t) {
        cos_t[t] = std::cos(t * theta_res);
        sin_t[t] = std::sin(t * theta_res);
    }

    std::vector<int> votes(static_cast<std::size_t>(grid.n_theta) * grid.n_rho, 0);
    for (int y = 0; y < edges.height; ++y)
        for (int x = 0; x < edges.width; ++x) {
            if (!edges.at(x, y)) continue;
            for (int t = 0; t < grid.n_theta; ++t) {
                const double rho = x * cos_t[t] + y * sin_t[t];
                const int r = grid.rho_center + static_cast<int>(std::lround(rho / rho_res));
                ++votes[static_cast<std::size_t>(t) * grid.n_rho + r];
            }
        }

    // theta - 1 below 0 (or theta + 1 past pi) describes the same line family
    // with the sign of rho flipped.
    const auto vote_at = [&](int t, int r) {
        if (t < 0) {
            t += grid.n_theta;
            r = grid.n_rho - 1 - r;
        } else if (t >= grid.n_theta) {
            t -= grid.n_theta;
            r = grid.n_rho - 1 - r;
        }
        if (r < 0 || r >= grid.n_rho) return 0;
        return votes[static_cast<std::size_t>(t) * grid.n_rho + r];
    };

    // A line slightly off a theta bin center spreads its votes over a few
    // rho cells, so peaks are scored over a three-cell rho band; the raw
    // count breaks ties toward the exact cell.
    const auto band_at = [&](int t, int r) {
        return vote_at(t, r - 1) + vote_at(t, r) + vote_at(t, r + 1);
    };

    struct Peak {
        int votes;
        int raw;
        int t;
        int r;
    };
    std::vector<Peak> peaks;
    for (int t = 0; t < grid.n_theta; ++t)
        for (int r = 0; r < grid.n_rho; ++r) {
            const int v = band_at(t, r);
            if (v < min_votes || v == 0) continue;
            bool is_max = true;
            for (int dt = -1; dt <= 1 && is_max; ++dt)
                for (int dr = -1; dr <= 1; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    if (band_at(t + dt, r + dr) > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) peaks.push_back({v, vote_at(t, r), t, r});
        }

    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.raw != b.raw) return a.raw > b.raw;
        if (a.t != b.t) return a.t < b.t;
        return a.r < b.r;
    });

    std::vector<Peak> kept;
    for (const Peak& p : peaks) {
        bool suppressed = false;
        for (const Peak& k : kept) {
            int dt = std::abs(p.t - k.t);
            int pr = p.r;
            if (grid.n_theta - dt < dt) {
                dt = grid.n_theta - dt;
                pr = grid.n_rho - 1 - pr;
            }
            if (dt < 3 && std::abs(pr - k.r) < 3) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(p);
    }

    std::vector<LineParams> lines;
    lines.reserve(kept.size());
    for (const Peak& p : kept)
        lines.push_back({(p.r - grid.rho_center) * rho_res, p.t * theta_res});
    return lines;
}

/**
 * Pairwise intersections of lines at least angle_min apart (angles compared
 * on the half-circle), kept when they land inside the image bounds scaled
 * 1.5x about the center.
 */
inline std::vector<Point> line_intersections(const std::vector<LineParams>& lines, int width,
                                             int height,
                                             double angle_min = 20.0 * std::numbers::pi / 180.0) {
    std::vector<Point> points;
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            double diff = std::abs(lines[i].theta - lines[j].theta);
            diff = std::min(diff, std::numbers::pi - diff);
            if (diff < angle_min) continue;
            const double det = std::sin(lines[j].theta - lines[i].theta);
            const double x = (lines[i].rho * std::sin(lines[j].theta) -
                              lines[j].rho * std::sin(lines[i].theta)) /
                             det;
            const double y = (lines[j].rho * std::cos(lines[i].theta) -
                              lines[i].rho * std::cos(lines[j].theta)) /
                             det;
            if (x < -0.25 * width || x > 1.25 * width) continue;
            if (y < -0.25 * height || y > 1.25 * height) continue;
            points.push_back({x, y});
        }
    return points;
}

// ---------------------------------------------------------------------------
// Corner clustering

struct KMeansResult {
    std::vector<Point> centers;
    std::vector<double> objective;  // sum of squared distances, per iteration
};

/**
 * k-means++ seeding followed by Lloyd iterations, stopping when no center
 * moves half a pixel or more. Deterministic for a given rng state.
 */
inline KMeansResult kmeans_pp(const std::vector<Point>& points, int k, Rng& rng, int iters = 64) {
    const int n = static_cast<int>(points.size());
    if (n < k)
        raise(ErrorCode::TooFewPoints, "need at least k points to form k clusters");

    const auto dist2 = [](const Point& a, const Point& b) {
        const double dx = a.x - b.x;
        const double dy = a.y - b.y;
        return dx * dx + dy * dy;
    };

    KMeansResult result;
    result.centers.push_back(points[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
    std::vector<double> nearest(n);
    while (static_cast<int>(result.centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = dist2(points[i], result.centers[0]);
            for (std::size_t c = 1; c < result.centers.size(); ++c)
                best = std::min(best, dist2(points[i], result.centers[c]));
            nearest[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            result.centers.push_back(points[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
            continue;
        }
        double r = rng.uniform01() * total;
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            r -= nearest[i];
            if (r <= 0.0) {
                chosen = i;
                break;
            }
        }
        result.centers.push_back(points[chosen]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < iters; ++iter) {
        double objective = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = dist2(points[i], result.centers[0]);
            for (int c = 1; c < k; ++c) {
                const double d = dist2(points[i], result.centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[i] = best;
            objective += bd;
        }
        result.objective.push_back(objective);

        std::vector<Point> sums(k);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums[assign[i]].x += points[i].x;
            sums[assign[i]].y += points[i].y;
            ++counts[assign[i]];
        }
        // An empty cluster grabs the point farthest from its current center.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int far = 0;
            double fd = -1.0;
            for (int i = 0; i < n; ++i) {
                const double d = dist2(points[i], result.centers[assign[i]]);
                if (d > fd && counts[assign[i]] > 1) {
                    fd = d;
                    far = i;
                }
            }
            --counts[assign[far]];
            sums[assign[far]].x -= points[far].x;
            sums[assign[far]].y -= points[far].y;
            assign[far] = c;
            sums[c] = points[far];
            counts[c] = 1;
        }

        double movement = 0.0;
        for (int c = 0; c < k; ++c) {
            const Point next{sums[c].x / counts[c], sums[c].y / counts[c]};
            movement = std::max(movement, std::sqrt(dist2(next, result.centers[c])));
            result.centers[c] = next;
        }
        if (movement < 0.5) break;
    }
    return result;
}

/// Clockwise order (image coordinates, y down) starting at the corner with
/// the smallest x + y.
inline Quad order_clockwise(const std::array<Point, 4>& centers) {
    Point centroid;
    for (const Point& p : centers) {
        centroid.x += p.x / 4;
        centroid.y += p.y / 4;
    }
    std::array<Point, 4> sorted = centers;
    std::sort(sorted.begin(), sorted.end(), [&](const Point& a, const Point& b) {
        return std::atan2(a.y - centroid.y, a.x - centroid.x) <
               std::atan2(b.y - centroid.y, b.x - centroid.x);
    });

    int start = 0;
    for (int i = 1; i < 4; ++i) {
        const double diff = (sorted[i].x + sorted[i].y) - (sorted[start].x + sorted[start].y);
        if (diff < 0 || (diff == 0 && sorted[i].y < sorted[start].y)) start = i;
    }
    Quad quad;
    for (int i = 0; i < 4; ++i)
        quad.corners[i] = sorted[(start + i) % 4];
    if (!detail::convex(quad))
        raise(ErrorCode::NonConvex, "corner points do not form a convex quad");
    return quad;
}

// ---------------------------------------------------------------------------
// Quad overlap

namespace detail {

inline double polygon_area(const std::vector<Point>& poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        twice += a.x * b.y - a.y * b.x;
    }
    return std::abs(twice) / 2.0;
}

/// Sutherland-Hodgman clip of a convex polygon by a convex quad.
inline std::vector<Point> clip_by_quad(std::vector<Point> poly, const Quad& clip) {
    double twice = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point& a = clip.corners[i];
        const Point& b = clip.corners[(i + 1) % 4];
        twice += a.x * b.y - a.y * b.x;
    }
    const double orient = twice >= 0 ? 1.0 : -1.0;

    for (int e = 0; e < 4 && !poly.empty(); ++e) {
        const Point& a = clip.corners[e];
        const Point& b = clip.corners[(e + 1) % 4];
        const auto inside = [&](const Point& p) {
            return orient * ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) >= 0.0;
        };
        std::vector<Point> next;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Point& cur = poly[i];
            const Point& prev = poly[(i + poly.size() - 1) % poly.size()];
            const bool cur_in = inside(cur);
            const bool prev_in = inside(prev);
            if (cur_in != prev_in) {
                const double da = (b.x - a.x) * (prev.y - a.y) - (b.y - a.y) * (prev.x - a.x);
                const double db = (b.x - a.x) * (cur.y - a.y) - (b.y - a.y) * (cur.x - a.x);
                const double t = da / (da - db);
                next.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
            }
            if (cur_in) next.push_back(cur);
        }
        poly = std::move(next);
    }
    return poly;
}

}  // namespace detail

/// Fraction of the true quad's area covered by the detected quad.
inline double recall_fraction(const Quad& truth, const Quad& detected) {
    std::vector<Point> poly(detected.corners.begin(), detected.corners.end());
    const double truth_area =
        detail::polygon_area({truth.corners.begin(), truth.corners.end()});
    if (truth_area <= 0.0)
        raise(ErrorCode::DegenerateQuad, "true quad has no area");
    return detail::polygon_area(detail::clip_by_quad(std::move(poly), truth)) / truth_area;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace detail {

/// Foreground pixels with at least one 4-neighbor outside the mask (image
/// border counts as outside).
inline std::vector<Point> mask_boundary(const Mask& mask) {
    std::vector<Point> pts;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == mask.width - 1 || y == mask.height - 1 ||
                              !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
                              !mask.at(x, y + 1);
            if (edge) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    return pts;
}

struct FittedLine {
    Point origin;
    Point dir;  // unit length
};

/// Total-least-squares line through the boundary points near a quad side,
/// staying clear of the rounded corners.
inline std::optional<FittedLine> fit_side(const std::vector<Point>& boundary, const Point& c0,
                                          const Point& c1) {
    const double len = std::hypot(c1.x - c0.x, c1.y - c0.y);
    if (len < 24.0) return std::nullopt;
    const Point dir{(c1.x - c0.x) / len, (c1.y - c0.y) / len};
    const Point normal{-dir.y, dir.x};

    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int n = 0;
    for (const Point& p : boundary) {
        const double along = (p.x - c0.x) * dir.x + (p.y - c0.y) * dir.y;
        const double off = (p.x - c0.x) * normal.x + (p.y - c0.y) * normal.y;
        if (along < 8.0 || along > len - 8.0 || std::abs(off) > 4.0) continue;
        sx += p.x;
        sy += p.y;
        sxx += p.x * p.x;
        syy += p.y * p.y;
        sxy += p.x * p.y;
        ++n;
    }
    if (n < 10) return std::nullopt;

    const double mx = sx / n;
    const double my = sy / n;
    const double cxx = sxx / n - mx * mx;
    const double cyy = syy / n - my * my;
    const double cxy = sxy / n - mx * my;
    const double angle = 0.5 * std::atan2(2 * cxy, cxx - cyy);
    return FittedLine{{mx, my}, {std::cos(angle), std::sin(angle)}};
}

inline std::optional<Point> line_pair_point(const FittedLine& a, const FittedLine& b) {
    const double det = a.dir.x * b.dir.y - a.dir.y * b.dir.x;
    if (std::abs(det) < 1e-6) return std::nullopt;
    const double dx = b.origin.x - a.origin.x;
    const double dy = b.origin.y - a.origin.y;
    const double t = (dx * b.dir.y - dy * b.dir.x) / det;
    return Point{a.origin.x + t * a.dir.x, a.origin.y + t * a.dir.y};
}

/// Re-derive each corner from least-squares fits of its two sides; keep the
/// coarse quad when the fits disagree with it.
inline Quad refine_quad(const Mask& mask, const Quad& coarse) {
    const std::vector<Point> boundary = mask_boundary(mask);
    std::array<std::optional<FittedLine>, 4> sides;
    for (int i = 0; i < 4; ++i) {
        sides[i] = fit_side(boundary, coarse.corners[i], coarse.corners[(i + 1) % 4]);
        if (!sides[i]) return coarse;
    }
    Quad refined;
    for (int i = 0; i < 4; ++i) {
        const auto corner = line_pair_point(*sides[(i + 3) % 4], *sides[i]);
        if (!corner) return coarse;
        const double drift = std::hypot(corner->x - coarse.corners[i].x,
                                        corner->y - coarse.corners[i].y);
        if (drift > 8.0) return coarse;
        refined.corners[i] = *corner;
    }
    return detail::convex(refined) ? refined : coarse;
}

}  // namespace detail

/**
 * Find the watermarked region in a captured frame and rectify it to
 * 512x512: median-filtered grayscale, adaptive threshold (both polarities,
 * judged by border contact then by component size), largest component,
 * mask refinement, Canny on the zero-padded mask, Hough lines, filtered
 * intersections, k-means++ corner clustering, clockwise ordering, and a
 * least-squares corner touch-up before the perspective warp.
 */
inline LocateResult locate_and_rectify(const RasterU8& captured) {
    if (captured.width < 64 || captured.height < 64)
        raise(ErrorCode::ImageTooSmall, "capture must be at least 64x64");

    const RasterU8 gray = median_filter(to_grayscale(captured), 3);

    // A capture whose border band is itself textured has no uniform
    // background to separate; the whole frame is then the region.
    const auto border_band_std = [&] {
        double sum = 0.0, sum_sq = 0.0;
        std::int64_t n = 0;
        for (int y = 0; y < gray.height; ++y)
            for (int x = 0; x < gray.width; ++x) {
                if (x >= 4 && y >= 4 && x < gray.width - 4 && y < gray.height - 4) continue;
                const double v = gray.at(x, y);
                sum += v;
                sum_sq += v * v;
                ++n;
            }
        return std::sqrt(std::max(0.0, sum_sq / n - (sum / n) * (sum / n)));
    };

    Mask refined;
    if (border_band_std() > 12.0) {
        refined = Mask(gray.width, gray.height, 1, 1);
    } else {
        const int block = (std::min(gray.width, gray.height) / 2) | 1;
        RasterU8 inverted(gray.width, gray.height, 1);
        for (std::size_t i = 0; i < gray.data.size(); ++i)
            inverted.data[i] = static_cast<std::uint8_t>(255 - gray.data[i]);
        const Mask bright = adaptive_threshold(gray, block, -4.0);
        const Mask dark = adaptive_threshold(inverted, block, -4.0);

        const auto border_contact = [](const Mask& m) {
            std::int64_t touching = 0, total = 0;
            for (int x = 0; x < m.width; ++x, total += 2)
                touching += m.at(x, 0) + m.at(x, m.height - 1);
            for (int y = 1; y + 1 < m.height; ++y, total += 2)
                touching += m.at(0, y) + m.at(m.width - 1, y);
            return static_cast<double>(touching) / static_cast<double>(total);
        };
        const auto component_of = [](const Mask& m) -> std::optional<Mask> {
            if (std::find(m.data.begin(), m.data.end(), 1) == m.data.end()) return std::nullopt;
            return largest_component(m);
        };

        const std::optional<Mask> comp_bright = component_of(bright);
        const std::optional<Mask> comp_dark = component_of(dark);
        if (!comp_bright && !comp_dark)
            raise(ErrorCode::LocalizationFailed, "segmentation: no foreground in either polarity");

        const auto area_of = [](const std::optional<Mask>& m) {
            if (!m) return std::int64_t{0};
            return static_cast<std::int64_t>(
                std::count(m->data.begin(), m->data.end(), std::uint8_t{1}));
        };
        bool use_bright;
        if (!comp_bright || !comp_dark) {
            use_bright = comp_bright.has_value();
        } else {
            const double cb = border_contact(bright);
            const double cd = border_contact(dark);
            use_bright =
                std::abs(cb - cd) > 0.02 ? cb < cd : area_of(comp_bright) >= area_of(comp_dark);
        }
        refined = refine_mask(use_bright ? *comp_bright : *comp_dark);
    }

    // Zero-pad before edge detection so a mask flush with the border still
    // produces boundary edges; line offsets are undone after voting.
    const int pad = 2;
    RasterU8 padded(refined.width + 2 * pad, refined.height + 2 * pad, 1);
    for (int y = 0; y < refined.height; ++y)
        for (int x = 0; x < refined.width; ++x)
            padded.at(x + pad, y + pad) = refined.at(x, y) ? 255 : 0;
    const Mask edges = canny(padded, 50.0, 150.0);

    const double min_votes = 0.3 * std::min(captured.width, captured.height);
    std::vector<LineParams> lines =
        hough_lines(edges, 1.0, std::numbers::pi / 180.0, min_votes);
    if (lines.empty())
        raise(ErrorCode::LocalizationFailed, "hough: no boundary lines above the vote floor");
    if (lines.size() > 16) lines.resize(16);

    const std::vector<Point> corners_raw =
        line_intersections(lines, padded.width, padded.height);
    if (corners_raw.size() < 4)
        raise(ErrorCode::LocalizationFailed, "intersections: fewer than four corner candidates");

    Rng rng(0x10CA7EULL);
    const KMeansResult clusters = kmeans_pp(corners_raw, 4, rng);

    Quad quad;
    try {
        std::array<Point, 4> centers;
        std::copy_n(clusters.centers.begin(), 4, centers.begin());
        quad = order_clockwise(centers);
    } catch (const Error&) {
        raise(ErrorCode::LocalizationFailed, "ordering: corner clusters are not convex");
    }
    for (Point& c : quad.corners) {
        c.x -= pad;
        c.y -= pad;
    }
    quad = detail::refine_quad(refined, quad);

    const double s = kRectifiedSide - 1.0;
    const Quad dst{{Point{0, 0}, Point{s, 0}, Point{s, s}, Point{0, s}}};
    const Homography h = homography_from_quads(quad, dst);
    LocateResult result;
    result.quad = quad;
    result.rectified = warp_perspective(captured, h, kRectifiedSide, kRectifiedSide);
    return result;
}

}  // namespace screenmark
