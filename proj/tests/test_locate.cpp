#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "screenmark/locate.hpp"

using namespace screenmark;

namespace {

RasterU8 textured_square(int side, std::uint64_t seed) {
    Rng rng(seed);
    const double fx = rng.uniform(0.02, 0.06);
    const double fy = rng.uniform(0.02, 0.06);
    RasterU8 img(side, side, 3);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = clamp_round_u8(
                    140 + 55 * std::sin(fx * x + 0.4 * c) * std::cos(fy * y - 0.3 * c));
    return img;
}

/// Paste src axis-aligned at (ox, oy) onto a constant background.
RasterU8 paste(const RasterU8& src, int canvas_w, int canvas_h, int ox, int oy,
               std::uint8_t background) {
    RasterU8 out(canvas_w, canvas_h, 3, background);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(ox + x, oy + y, c) = src.at(x, y, c);
    return out;
}

double corner_error(const Quad& got, const Quad& want) {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i)
        worst = std::max(worst, std::hypot(got.corners[i].x - want.corners[i].x,
                                           got.corners[i].y - want.corners[i].y));
    return worst;
}

}  // namespace

TEST_CASE("adaptive threshold separates a bright square from dark ground") {
    RasterU8 gray(200, 200, 1, 20);
    for (int y = 60; y < 140; ++y)
        for (int x = 60; x < 140; ++x)
            gray.at(x, y) = 220;
    Mask mask = adaptive_threshold(gray, 101, -4.0);
    int interior = 0;
    for (int y = 60; y < 140; ++y)
        for (int x = 60; x < 140; ++x)
            interior += mask.at(x, y);
    CHECK(interior >= 80 * 80 * 99 / 100);

    RasterU8 flat(64, 64, 1, 90);
    Mask all_one = adaptive_threshold(flat, 31, 5.0);
    CHECK(std::count(all_one.data.begin(), all_one.data.end(), 1) == 64 * 64);

    CHECK_THROWS_AS(adaptive_threshold(gray, 100, 0.0), Error);
}

TEST_CASE("inverting the image complements the thresholded interior") {
    RasterU8 gray(120, 120, 1, 200);
    for (int y = 40; y < 80; ++y)
        for (int x = 40; x < 80; ++x)
            gray.at(x, y) = 30;
    RasterU8 inv(120, 120, 1);
    for (std::size_t i = 0; i < gray.data.size(); ++i)
        inv.data[i] = static_cast<std::uint8_t>(255 - gray.data[i]);
    Mask dark_obj = adaptive_threshold(gray, 61, -4.0);
    Mask bright_obj = adaptive_threshold(inv, 61, -4.0);
    int hits = 0;
    for (int y = 45; y < 75; ++y)
        for (int x = 45; x < 75; ++x)
            hits += !dark_obj.at(x, y) && bright_obj.at(x, y);
    CHECK(hits == 30 * 30);
}

TEST_CASE("largest_component keeps only the biggest blob") {
    Mask m(60, 30, 1);
    for (int y = 5; y < 15; ++y)
        for (int x = 5; x < 15; ++x)
            m.at(x, y) = 1;  // 100 px
    for (int y = 20; y < 25; ++y)
        for (int x = 30; x < 40; ++x)
            m.at(x, y) = 1;  // 50 px
    Mask out = largest_component(m);
    CHECK(std::count(out.data.begin(), out.data.end(), 1) == 100);
    CHECK(out.at(10, 10) == 1);
    CHECK(out.at(35, 22) == 0);

    Mask single = largest_component(out);
    CHECK(single.data == out.data);

    Mask empty(8, 8, 1);
    CHECK_THROWS_AS(largest_component(empty), Error);
}

TEST_CASE("largest_component breaks area ties toward the earlier blob") {
    Mask m(40, 40, 1);
    for (int y = 2; y < 7; ++y)
        for (int x = 2; x < 7; ++x)
            m.at(x, y) = 1;
    for (int y = 20; y < 25; ++y)
        for (int x = 20; x < 25; ++x)
            m.at(x, y) = 1;
    Mask out = largest_component(m);
    CHECK(out.at(2, 2) == 1);
    CHECK(out.at(22, 22) == 0);
}

TEST_CASE("refine_mask fills holes and reconnects cracks") {
    Mask m(80, 80, 1);
    for (int y = 10; y < 70; ++y)
        for (int x = 10; x < 70; ++x)
            m.at(x, y) = 1;
    for (int y = 30; y < 50; ++y)
        for (int x = 30; x < 50; ++x)
            m.at(x, y) = 0;  // interior hole
    for (int y = 10; y < 70; ++y)
        for (int x = 38; x < 41; ++x)
            m.at(x, y) = 0;  // full-height 3 px crack
    Mask out = refine_mask(m);
    CHECK(out.at(40, 40) == 1);
    CHECK(out.at(39, 15) == 1);
    for (int y = 12; y < 68; ++y)
        for (int x = 12; x < 68; ++x)
            CHECK(out.at(x, y) == 1);
}

TEST_CASE("refine_mask is idempotent") {
    Rng rng(5);
    Mask speckle(100, 100, 1);
    for (auto& v : speckle.data)
        v = rng.uniform01() < 0.5 ? 1 : 0;
    Mask ones(64, 64, 1, 1);
    Mask rect(90, 90, 1);
    for (int y = 20; y < 60; ++y)
        for (int x = 25; x < 70; ++x)
            rect.at(x, y) = 1;
    for (const Mask& m : {speckle, ones, rect}) {
        Mask once = refine_mask(m);
        Mask twice = refine_mask(once);
        CHECK(twice.data == once.data);
    }
    CHECK_THROWS_AS(refine_mask(Mask(16, 16, 1)), Error);
}

TEST_CASE("canny finds steps and rejects constants") {
    RasterU8 flat(64, 64, 1, 120);
    Mask none = canny(flat, 40.0, 100.0);
    CHECK(std::count(none.data.begin(), none.data.end(), 1) == 0);

    RasterU8 step(64, 64, 1, 0);
    for (int y = 0; y < 64; ++y)
        for (int x = 32; x < 64; ++x)
            step.at(x, y) = 255;
    Mask edge = canny(step, 40.0, 100.0);
    for (int y = 8; y < 56; ++y) {
        int per_row = 0;
        for (int x = 0; x < 64; ++x)
            per_row += edge.at(x, y);
        CHECK(per_row >= 1);
        CHECK(per_row <= 2);
        CHECK((edge.at(31, y) || edge.at(32, y)));
    }

    CHECK_THROWS_AS(canny(flat, 100.0, 40.0), Error);
    CHECK_THROWS_AS(canny(flat, 0.0, 40.0), Error);
}

TEST_CASE("hough finds an isolated row and a rectangle's four sides") {
    Mask row(300, 300, 1);
    for (int x = 0; x < 300; ++x)
        row.at(x, 100) = 1;
    auto lines = hough_lines(row, 1.0, std::numbers::pi / 180.0, 90.0);
    REQUIRE(!lines.empty());
    CHECK(std::abs(lines[0].rho - 100.0) <= 1.0);
    CHECK(std::abs(lines[0].theta - std::numbers::pi / 2) <= std::numbers::pi / 180.0);

    CHECK(hough_lines(Mask(50, 50, 1), 1.0, std::numbers::pi / 180.0, 10.0).empty());

    Mask rect(400, 400, 1);
    for (int x = 80; x <= 320; ++x) {
        rect.at(x, 60) = 1;
        rect.at(x, 340) = 1;
    }
    for (int y = 60; y <= 340; ++y) {
        rect.at(80, y) = 1;
        rect.at(320, y) = 1;
    }
    auto sides = hough_lines(rect, 1.0, std::numbers::pi / 180.0, 200.0);
    REQUIRE(sides.size() == 4);
    int verticals = 0, horizontals = 0;
    for (const LineParams& l : sides) {
        if (l.theta < 0.01) ++verticals;
        if (std::abs(l.theta - std::numbers::pi / 2) < 0.01) ++horizontals;
    }
    CHECK(verticals == 2);
    CHECK(horizontals == 2);
}

TEST_CASE("line intersections respect the angle filter and bounds") {
    const double v = 0.0;                       // x = 0
    const double hline = std::numbers::pi / 2;  // y = 0
    std::vector<LineParams> lines{{0.0, v}, {0.0, hline}};
    auto pts = line_intersections(lines, 100, 100);
    REQUIRE(pts.size() == 1);
    CHECK(std::abs(pts[0].x) < 1e-9);
    CHECK(std::abs(pts[0].y) < 1e-9);

    std::vector<LineParams> parallel{{10.0, hline}, {60.0, hline}};
    CHECK(line_intersections(parallel, 100, 100).empty());

    std::vector<LineParams> rect{{60.0, hline}, {340.0, hline}, {80.0, v}, {320.0, v}};
    CHECK(line_intersections(rect, 400, 400).size() == 4);

    std::vector<LineParams> far{{0.0, v}, {3000.0, hline}};
    CHECK(line_intersections(far, 100, 100).empty());
}

TEST_CASE("kmeans recovers tight blobs and stays deterministic") {
    std::vector<Point> four{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    Rng rng(3);
    KMeansResult exact = kmeans_pp(four, 4, rng);
    for (const Point& p : four) {
        double best = 1e18;
        for (const Point& c : exact.centers)
            best = std::min(best, std::hypot(c.x - p.x, c.y - p.y));
        CHECK(best < 1e-9);
    }

    std::vector<Point> pts;
    std::vector<Point> truth{{0, 0}, {200, 0}, {200, 200}, {0, 200}};
    Rng gen(17);
    std::vector<Point> means(4);
    for (int b = 0; b < 4; ++b) {
        double sx = 0, sy = 0;
        for (int i = 0; i < 20; ++i) {
            Point p{truth[b].x + gen.normal(), truth[b].y + gen.normal()};
            pts.push_back(p);
            sx += p.x;
            sy += p.y;
        }
        means[b] = {sx / 20, sy / 20};
    }
    Rng ra(9), rb(9);
    KMeansResult a = kmeans_pp(pts, 4, ra);
    KMeansResult b = kmeans_pp(pts, 4, rb);
    for (int c = 0; c < 4; ++c) {
        CHECK(a.centers[c].x == b.centers[c].x);
        CHECK(a.centers[c].y == b.centers[c].y);
        double best = 1e18;
        for (const Point& m : means)
            best = std::min(best, std::hypot(a.centers[c].x - m.x, a.centers[c].y - m.y));
        CHECK(best <= 1.0);
    }
    for (std::size_t i = 1; i < a.objective.size(); ++i)
        CHECK(a.objective[i] <= a.objective[i - 1] + 1e-9);

    Rng rc(1);
    CHECK_THROWS_AS(kmeans_pp({{0, 0}, {1, 1}}, 4, rc), Error);
}

TEST_CASE("order_clockwise starts top-left and rejects degenerate input") {
    Quad q = order_clockwise({Point{1, 1}, Point{0, 1}, Point{0, 0}, Point{1, 0}});
    CHECK(q.corners[0].x == 0);
    CHECK(q.corners[0].y == 0);
    CHECK(q.corners[1].x == 1);
    CHECK(q.corners[1].y == 0);
    CHECK(q.corners[2].x == 1);
    CHECK(q.corners[2].y == 1);
    CHECK(q.corners[3].x == 0);
    CHECK(q.corners[3].y == 1);

    // Rotated square: clockwise order must follow the rotation.
    Quad r = order_clockwise({Point{5, 0}, Point{0, 5}, Point{10, 5}, Point{5, 10}});
    CHECK(r.corners[0].y == 0);
    CHECK(r.corners[1].x == 10);
    CHECK(r.corners[2].y == 10);
    CHECK(r.corners[3].x == 0);

    CHECK_THROWS_AS(order_clockwise({Point{0, 0}, Point{1, 1}, Point{2, 2}, Point{3, 3}}),
                    Error);
}

TEST_CASE("recall_fraction measures quad overlap") {
    Quad unit{{Point{0, 0}, Point{100, 0}, Point{100, 100}, Point{0, 100}}};
    CHECK(recall_fraction(unit, unit) == Catch::Approx(1.0));
    Quad half{{Point{50, 0}, Point{150, 0}, Point{150, 100}, Point{50, 100}}};
    CHECK(recall_fraction(unit, half) == Catch::Approx(0.5));
    Quad outside{{Point{500, 500}, Point{600, 500}, Point{600, 600}, Point{500, 600}}};
    CHECK(recall_fraction(unit, outside) == Catch::Approx(0.0));
}

TEST_CASE("locate finds an axis-aligned paste within two pixels") {
    RasterU8 capture = paste(textured_square(512, 7), 800, 800, 100, 100, 40);
    LocateResult res = locate_and_rectify(capture);
    Quad truth{{Point{100, 100}, Point{611, 100}, Point{611, 611}, Point{100, 611}}};
    CHECK(corner_error(res.quad, truth) <= 2.0);
    REQUIRE(res.rectified.width == 512);
    REQUIRE(res.rectified.height == 512);
    CHECK(recall_fraction(truth, res.quad) >= 0.98);

    // The rectified content should track the pasted source closely.
    const RasterU8 src = textured_square(512, 7);
    double err = 0.0;
    for (int y = 16; y < 496; y += 7)
        for (int x = 16; x < 496; x += 7)
            err += std::abs(static_cast<double>(res.rectified.at(x, y, 1)) - src.at(x, y, 1));
    err /= (69.0 * 69.0);
    CHECK(err <= 3.0);
}

TEST_CASE("locate returns the full frame when there is no background") {
    RasterU8 capture = textured_square(512, 11);
    LocateResult res = locate_and_rectify(capture);
    Quad truth{{Point{0, 0}, Point{511, 0}, Point{511, 511}, Point{0, 511}}};
    CHECK(corner_error(res.quad, truth) <= 2.0);
}

TEST_CASE("locate handles a perspective-warped paste") {
    const RasterU8 src = textured_square(512, 23);
    Rng rng(41);
    const Homography px = unit_to_pixels(random_perspective(rng, 0.08), 512, 512);

    // Map source pixel-center corners through the jittered square, then offset.
    const Quad src_quad{{Point{0, 0}, Point{511, 0}, Point{511, 511}, Point{0, 511}}};
    Quad truth;
    for (int i = 0; i < 4; ++i) {
        const Point p = px.map(src_quad.corners[i]);
        truth.corners[i] = {p.x + 144, p.y + 144};
    }

    const Homography h = homography_from_quads(src_quad, truth);
    RasterU8 capture(800, 800, 3, 35);
    WarpResult warped = warp_perspective_masked(src, h, 800, 800);
    for (int y = 0; y < 800; ++y)
        for (int x = 0; x < 800; ++x)
            if (warped.coverage.at(x, y))
                for (int c = 0; c < 3; ++c)
                    capture.at(x, y, c) = warped.image.at(x, y, c);

    LocateResult res = locate_and_rectify(capture);
    double mean_err = 0.0;
    for (int i = 0; i < 4; ++i)
        mean_err += std::hypot(res.quad.corners[i].x - truth.corners[i].x,
                               res.quad.corners[i].y - truth.corners[i].y) / 4.0;
    CHECK(mean_err <= 3.0);
    CHECK(recall_fraction(truth, res.quad) >= 0.95);
}

TEST_CASE("locate rejects undersized captures and reports failed stages") {
    CHECK_THROWS_AS(locate_and_rectify(RasterU8(32, 32, 3)), Error);
    try {
        locate_and_rectify(RasterU8(128, 128, 3, 77));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LocalizationFailed);
    }
}
