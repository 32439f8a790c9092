#include <catch2/catch_amalgamated.hpp>

#include "screenmark/raster.hpp"

using namespace screenmark;

TEST_CASE("clamp_round_u8 rounds half away from zero and clamps") {
    CHECK(clamp_round_u8(0.0) == 0);
    CHECK(clamp_round_u8(0.4) == 0);
    CHECK(clamp_round_u8(0.5) == 1);
    CHECK(clamp_round_u8(1.5) == 2);
    CHECK(clamp_round_u8(2.5) == 3);
    CHECK(clamp_round_u8(254.5) == 255);
    CHECK(clamp_round_u8(-3.0) == 0);
    CHECK(clamp_round_u8(300.0) == 255);
    CHECK(clamp_round_u8(127.49) == 127);
}

TEST_CASE("raster indexing is row-major interleaved") {
    RasterU8 img(4, 3, 3);
    img.at(2, 1, 0) = 10;
    img.at(2, 1, 1) = 20;
    img.at(2, 1, 2) = 30;
    const std::size_t base = (1 * 4 + 2) * 3;
    CHECK(img.data[base + 0] == 10);
    CHECK(img.data[base + 1] == 20);
    CHECK(img.data[base + 2] == 30);
}

TEST_CASE("raster construction rejects bad shapes") {
    CHECK_THROWS_AS(RasterU8(0, 4, 1), Error);
    CHECK_THROWS_AS(RasterU8(4, 4, 2), Error);
    try {
        RasterU8 img(4, -1, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("crop copies the window and checks bounds") {
    RasterU8 img(6, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>(10 * y + x + c);
    RasterU8 window = crop(img, 2, 1, 3, 2);
    REQUIRE(window.width == 3);
    REQUIRE(window.height == 2);
    REQUIRE(window.channels == 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(window.at(x, y, c) == img.at(2 + x, 1 + y, c));

    CHECK_THROWS_AS(crop(img, -1, 0, 2, 2), Error);
    CHECK_THROWS_AS(crop(img, 5, 0, 2, 2), Error);
    CHECK_THROWS_AS(crop(img, 0, 0, 0, 2), Error);
    CHECK_THROWS_AS(crop(img, 0, 3, 2, 2), Error);
}

TEST_CASE("to_grayscale uses the standard luma weights") {
    RasterU8 img(2, 1, 3);
    img.at(0, 0, 0) = 200;
    img.at(0, 0, 1) = 100;
    img.at(0, 0, 2) = 0;
    img.at(1, 0, 0) = 255;
    img.at(1, 0, 1) = 255;
    img.at(1, 0, 2) = 255;

    RasterU8 gray = to_grayscale(img);
    // 0.299*200 + 0.587*100 = 118.5, rounds half away from zero to 119
    CHECK(gray.at(0, 0) == 119);
    CHECK(gray.at(1, 0) == 255);

    RasterU8 single(2, 2, 1);
    CHECK_THROWS_AS(to_grayscale(single), Error);
}

TEST_CASE("gray_plane keeps unrounded luma") {
    RasterU8 img(1, 1, 3);
    img.at(0, 0, 0) = 200;
    img.at(0, 0, 1) = 100;
    img.at(0, 0, 2) = 0;
    RasterF plane = gray_plane(img);
    CHECK(plane.at(0, 0) == Catch::Approx(118.5).margin(1e-4));
}

TEST_CASE("error carries its code and name") {
    Error e(ErrorCode::EvenKernel, "width 4");
    CHECK(e.code() == ErrorCode::EvenKernel);
    CHECK(std::string(e.what()).find("EvenKernel") != std::string::npos);
}
