#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "screenmark/locate.hpp"
#include "screenmark/synth.hpp"

using namespace screenmark;

TEST_CASE("textures are reproducible and seed-sensitive") {
    RasterU8 a = synth_texture(5);
    RasterU8 b = synth_texture(5);
    CHECK(a.data == b.data);
    RasterU8 c = synth_texture(6);
    CHECK(a.data != c.data);
}

TEST_CASE("textures stay mid-range with clipping headroom") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RasterU8 img = synth_texture(seed);
        REQUIRE(img.width == 512);
        REQUIRE(img.height == 512);
        REQUIRE(img.channels == 3);
        auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
        CHECK(*lo >= 8);
        CHECK(*hi <= 247);
        double mean = 0.0;
        for (std::uint8_t v : img.data) mean += v;
        mean /= static_cast<double>(img.data.size());
        CHECK(mean > 100.0);
        CHECK(mean < 156.0);
    }
}

TEST_CASE("textures carry enough contrast to localize as full frames") {
    for (std::uint64_t seed : {0ULL, 7ULL, 19ULL}) {
        RasterU8 img = synth_texture(seed);
        LocateResult res = locate_and_rectify(img);
        for (int i = 0; i < 4; ++i) {
            const double tx = (i == 1 || i == 2) ? 511.0 : 0.0;
            const double ty = (i >= 2) ? 511.0 : 0.0;
            CHECK(std::hypot(res.quad.corners[i].x - tx, res.quad.corners[i].y - ty) <= 2.0);
        }
    }
}

TEST_CASE("captures composite the warped source over a uniform background") {
    RasterU8 src = synth_texture(3);
    Rng rng(100);
    Capture cap = synth_capture(src, rng);
    REQUIRE(cap.image.width == 800);
    REQUIRE(cap.image.height == 800);
    CHECK(cap.background >= 15);
    CHECK(cap.background <= 70);

    // Canvas corners lie outside any jittered paste.
    for (int c = 0; c < 3; ++c) {
        CHECK(cap.image.at(0, 0, c) == cap.background);
        CHECK(cap.image.at(799, 799, c) == cap.background);
    }

    // Corner jitter is bounded by 8% of the side plus the centering margin.
    const double bound = 0.08 * 511.0 + 1.0;
    const Point nominal[4] = {{144, 144}, {655, 144}, {655, 655}, {144, 655}};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(cap.truth.corners[i].x - nominal[i].x) <= bound);
        CHECK(std::abs(cap.truth.corners[i].y - nominal[i].y) <= bound);
    }
}

TEST_CASE("captures replay exactly from the generator seed") {
    RasterU8 src = synth_texture(9);
    Rng r1(77), r2(77);
    Capture a = synth_capture(src, r1);
    Capture b = synth_capture(src, r2);
    CHECK(a.image.data == b.image.data);
    CHECK(a.background == b.background);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.truth.corners[i].x == b.truth.corners[i].x);
        CHECK(a.truth.corners[i].y == b.truth.corners[i].y);
    }
}

TEST_CASE("captures localize within the corpus tolerances") {
    RasterU8 src = synth_texture(12);
    Rng rng(2024);
    for (int trial = 0; trial < 3; ++trial) {
        Capture cap = synth_capture(src, rng);
        LocateResult res = locate_and_rectify(cap.image);
        double mean_err = 0.0;
        for (int i = 0; i < 4; ++i)
            mean_err += std::hypot(res.quad.corners[i].x - cap.truth.corners[i].x,
                                   res.quad.corners[i].y - cap.truth.corners[i].y) / 4.0;
        CHECK(mean_err <= 3.0);
        CHECK(recall_fraction(cap.truth, res.quad) >= 0.95);
    }
}

TEST_CASE("capture input validation") {
    Rng rng(4);
    CHECK_THROWS_AS(synth_capture(RasterU8(64, 64, 1, 10), rng), Error);
    RasterU8 src = synth_texture(1, 128, 128);
    CHECK_THROWS_AS(synth_capture(src, rng, 140), Error);
    Capture ok = synth_capture(src, rng, 256);
    CHECK(ok.image.width == 256);
}
