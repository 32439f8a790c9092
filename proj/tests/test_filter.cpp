#include <catch2/catch_amalgamated.hpp>

#include "screenmark/filter.hpp"

using namespace screenmark;

namespace {

RasterF constant_plane(int w, int h, float v) {
    RasterF p(w, h);
    for (float& f : p.data) f = v;
    return p;
}

}  // namespace

TEST_CASE("convolve2d identity kernel returns the input") {
    RasterF src(5, 4);
    for (std::size_t i = 0; i < src.data.size(); ++i)
        src.data[i] = static_cast<float>(i);
    Kernel id(3, 3);
    id.at(1, 1) = 1.0;
    RasterF out = convolve2d(src, id);
    for (std::size_t i = 0; i < src.data.size(); ++i)
        CHECK(out.data[i] == Catch::Approx(src.data[i]));
}

TEST_CASE("convolve2d rejects even kernels") {
    RasterF src(4, 4);
    Kernel even(4, 3);
    CHECK_THROWS_AS(convolve2d(src, even), Error);
}

TEST_CASE("convolve2d replicates the border") {
    // A 1-wide column image: averaging horizontally must return the same column.
    RasterF src(1, 3);
    src.at(0, 0) = 3.0f;
    src.at(0, 1) = 6.0f;
    src.at(0, 2) = 9.0f;
    Kernel mean(3, 1);
    mean.at(0, 0) = mean.at(1, 0) = mean.at(2, 0) = 1.0 / 3.0;
    RasterF out = convolve2d(src, mean);
    CHECK(out.at(0, 0) == Catch::Approx(3.0));
    CHECK(out.at(0, 1) == Catch::Approx(6.0));
    CHECK(out.at(0, 2) == Catch::Approx(9.0));
}

TEST_CASE("gaussian taps are normalized and symmetric") {
    auto taps = gaussian_taps(1.4);
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t i = 0; i < taps.size() / 2; ++i)
        CHECK(taps[i] == Catch::Approx(taps[taps.size() - 1 - i]));
    CHECK_THROWS_AS(gaussian_taps(0.0), Error);
}

TEST_CASE("gaussian_blur preserves constant planes") {
    RasterF src = constant_plane(16, 16, 42.0f);
    RasterF out = gaussian_blur(src, 2.0);
    for (float v : out.data)
        CHECK(v == Catch::Approx(42.0).margin(1e-4));
}

TEST_CASE("gaussian_blur reduces contrast of an impulse") {
    RasterF src(15, 15);
    src.at(7, 7) = 100.0f;
    RasterF out = gaussian_blur(src, 1.5);
    CHECK(out.at(7, 7) < 100.0f);
    CHECK(out.at(7, 7) > out.at(6, 7));
    CHECK(out.at(6, 7) == Catch::Approx(out.at(8, 7)).margin(1e-5));
    CHECK(out.at(7, 6) == Catch::Approx(out.at(7, 8)).margin(1e-5));
    double sum = 0.0;
    for (float v : out.data) sum += v;
    CHECK(sum == Catch::Approx(100.0).margin(1e-3));
}

TEST_CASE("box_filter averages neighborhoods") {
    RasterF src(3, 3);
    for (std::size_t i = 0; i < 9; ++i) src.data[i] = static_cast<float>(i + 1);
    RasterF out = box_filter(src, 3);
    CHECK(out.at(1, 1) == Catch::Approx(5.0));
    CHECK_THROWS_AS(box_filter(src, 2), Error);
}

TEST_CASE("median_filter removes isolated impulses") {
    RasterU8 src(5, 5, 1, 10);
    src.at(2, 2) = 255;
    RasterU8 out = median_filter(src, 3);
    CHECK(out.at(2, 2) == 10);
    CHECK(out.at(0, 0) == 10);
    CHECK_THROWS_AS(median_filter(src, 4), Error);
}

TEST_CASE("per_channel applies independently to each channel") {
    RasterU8 src(4, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            src.at(x, y, 0) = 10;
            src.at(x, y, 1) = 20;
            src.at(x, y, 2) = 30;
        }
    RasterU8 out = per_channel(src, [](const RasterF& p) {
        RasterF q = p;
        for (float& v : q.data) v += 1.0f;
        return q;
    });
    CHECK(out.at(1, 1, 0) == 11);
    CHECK(out.at(1, 1, 1) == 21);
    CHECK(out.at(1, 1, 2) == 31);
}
