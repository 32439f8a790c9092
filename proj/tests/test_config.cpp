#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "screenmark/config.hpp"

using namespace screenmark;

TEST_CASE("config parses sections, comments and quoted strings") {
    Config cfg = Config::parse(
        "# top comment\n"
        "name = \"run one\"\n"
        "\n"
        "[channel]\n"
        "noise_max_sigma = 3.5   # trailing note\n"
        "seed = 0xDEADBEEF\n"
        "[embed]\n"
        "eta = 0.8\n"
        "eta = 0.9\n");
    CHECK(cfg.get_string("name") == "run one");
    CHECK(cfg.get_double("channel.noise_max_sigma", 0.0) == 3.5);
    CHECK(cfg.get_u64("channel.seed", 0) == 0xDEADBEEFULL);
    CHECK(cfg.get_double("embed.eta", 0.0) == 0.9);
    CHECK(cfg.size() == 4);
}

TEST_CASE("missing keys fall back to the caller's default") {
    Config cfg = Config::parse("a = 1\n");
    CHECK(cfg.get_double("b", 2.5) == 2.5);
    CHECK(cfg.get_long("b", -7) == -7);
    CHECK(cfg.get_bool("b", true));
    CHECK(cfg.get_string("b", "x") == "x");
    CHECK(cfg.has("a"));
    CHECK(!cfg.has("b"));
}

TEST_CASE("malformed lines and values are rejected") {
    CHECK_THROWS_AS(Config::parse("just a bare line\n"), Error);
    CHECK_THROWS_AS(Config::parse("[unterminated\n"), Error);
    CHECK_THROWS_AS(Config::parse("= 3\n"), Error);
    Config cfg = Config::parse("v = not_a_number\nflag = yes\n");
    CHECK_THROWS_AS(cfg.get_double("v", 0.0), Error);
    CHECK_THROWS_AS(cfg.get_long("v", 0), Error);
    CHECK_THROWS_AS(cfg.get_bool("flag", false), Error);
    CHECK(cfg.get_string("v") == "not_a_number");
}

TEST_CASE("hash inside a quoted value is not a comment") {
    Config cfg = Config::parse("label = \"a # b\"\n");
    CHECK(cfg.get_string("label") == "a # b");
}

TEST_CASE("channel overlay maps field names onto ChannelConfig") {
    Config cfg = Config::parse(
        "[channel]\n"
        "noise_max_sigma = 2.0\n"
        "blur_max_kernel = 3\n"
        "moire_probability = 1.0\n"
        "total_steps = 500\n");
    ChannelConfig cc;
    cfg.apply(cc);
    CHECK(cc.noise_max_sigma == 2.0);
    CHECK(cc.blur_max_kernel == 3);
    CHECK(cc.moire_probability == 1.0);
    CHECK(cc.total_steps == 500);
    CHECK(cc.brightness_max_offset == 24.0);

    Config bad = Config::parse("[channel]\nnoise_sigma = 2.0\n");
    CHECK_THROWS_AS(bad.apply(cc), Error);
}

TEST_CASE("embed overlay maps field names onto EmbedConfig") {
    Config cfg = Config::parse(
        "[embed]\n"
        "eta = 0.75\n"
        "per_bit_gain = 0.5\n"
        "[channel]\n"
        "step = 10\n");
    EmbedConfig ec;
    cfg.apply(ec);
    CHECK(ec.eta == 0.75);
    CHECK(ec.per_bit_gain == 0.5);
    CHECK(ec.sub_side == 256);

    Config bad = Config::parse("[embed]\ngain = 0.5\n");
    CHECK_THROWS_AS(bad.apply(ec), Error);
}

TEST_CASE("config round-trips through a file") {
    const char* path = "test_config_tmp.toml";
    {
        std::ofstream out(path);
        out << "[embed]\neta = 0.6\n";
    }
    Config cfg = Config::load(path);
    CHECK(cfg.get_double("embed.eta", 0.0) == 0.6);
    std::remove(path);
    CHECK_THROWS_AS(Config::load("does_not_exist.toml"), Error);
}
