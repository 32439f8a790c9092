#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "screenmark/metrics.hpp"

using namespace screenmark;

TEST_CASE("psnr of identical images is infinite") {
    RasterU8 a(8, 8, 3, 77);
    CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("psnr matches a hand-computed case") {
    RasterU8 a(2, 2, 1, 100);
    RasterU8 b(2, 2, 1, 100);
    b.at(0, 0) = 110;  // MSE = 100/4 = 25
    double expected = 10.0 * std::log10(255.0 * 255.0 / 25.0);
    CHECK(psnr(a, b) == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("psnr rejects mismatched shapes") {
    RasterU8 a(4, 4, 1);
    RasterU8 b(4, 5, 1);
    CHECK_THROWS_AS(psnr(a, b), Error);
}

TEST_CASE("ssim of identical images is 1") {
    RasterU8 a(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            a.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);
    CHECK(ssim(a, a) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("ssim drops under noise and stays in range") {
    RasterU8 a(32, 32, 1);
    RasterU8 b(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            a.at(x, y) = static_cast<std::uint8_t>((x * 11 + y * 5) % 200 + 20);
            b.at(x, y) = static_cast<std::uint8_t>((a.at(x, y) + ((x ^ y) % 40)) % 256);
        }
    double s = ssim(a, b);
    CHECK(s < 1.0);
    CHECK(s > -1.0);
}

TEST_CASE("ssim requires the minimum window size") {
    RasterU8 a(10, 32, 1);
    CHECK_THROWS_AS(ssim(a, a), Error);
    try {
        ssim(a, a);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ImageTooSmall);
    }
}

TEST_CASE("ber counts differing positions") {
    BitString sent(8, 0);
    BitString recv(8, 0);
    recv[1] = 1;
    recv[5] = 1;
    CHECK(ber(sent, recv) == Catch::Approx(0.25));
    CHECK(ber(sent, sent) == 0.0);

    BitString shorter(4, 0);
    CHECK_THROWS_AS(ber(sent, shorter), Error);
    BitString empty_a, empty_b;
    CHECK_THROWS_AS(ber(empty_a, empty_b), Error);
}
