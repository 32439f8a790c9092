#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "screenmark/png_io.hpp"
#include "screenmark/synth.hpp"

using namespace screenmark;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = "cli_work";

int run(const std::string& args, const std::string& out = "stdout.txt",
        const std::string& err = "stderr.txt") {
    const std::string cmd = std::string(SCREENMARK_BIN) + " " + args + " > " +
                            (kWork / out).string() + " 2> " + (kWork / err).string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const std::string& name) {
    std::ifstream in(kWork / name, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json out_json() { return json::parse(slurp("stdout.txt")); }

std::string path(const std::string& name) { return (kWork / name).string(); }

const char* kPayload = "0123456789abcdef0123456789abcdef";
const char* kKey = "deadbeefcafef00d";

/// CSV minus the per-stage runtime columns, which are measurements.
std::string result_columns(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (i < 6 || i == 10) out += fields[i] + ",";
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("cli round trip through files", "[cli]") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    save_png(path("host.png"), synth_texture(0));

    REQUIRE(run("embed --in " + path("host.png") + " --out " + path("marked.png") +
                " --payload " + kPayload + " --key " + kKey) == 0);
    json quality = out_json();
    CHECK(quality["psnr"].get<double>() >= 28.0);
    CHECK(quality["ssim"].get<double>() >= 0.90);

    REQUIRE(run("extract --in " + path("marked.png") + " --key " + kKey + " --truth " + kPayload) == 0);
    json ex = out_json();
    CHECK(ex["ber"].get<double>() == 0.0);
    CHECK(ex["payload"].get<std::string>() == kPayload);
}

TEST_CASE("cli rejects malformed payloads and missing files", "[cli]") {
    CHECK(run("embed --in " + path("host.png") + " --out " + path("x.png") +
              " --payload 0123456789abcdef0123456789abcde --key " + kKey) == 1);
    CHECK(slurp("stderr.txt").find("PayloadLengthMismatch") != std::string::npos);

    CHECK(run("embed --in " + path("no_such.png") + " --out " + path("x.png") + " --payload " +
              kPayload + " --key " + kKey) == 1);

    std::ofstream(kWork / "garbage.png") << "not a png";
    CHECK(run("extract --in " + path("garbage.png") + " --key " + kKey) == 3);
}

TEST_CASE("cli attack honors identity configs and trace replay", "[cli]") {
    std::ofstream(kWork / "ident.toml") << "[channel]\nmotion_blur_probability = 0\n";
    REQUIRE(run("attack --in " + path("marked.png") + " --out " + path("same.png") +
                " --config " + path("ident.toml") + " --step 0") == 0);
    CHECK(load_png(path("same.png")).data == load_png(path("marked.png")).data);

    REQUIRE(run("attack --in " + path("marked.png") + " --out " + path("hit.png") +
                " --seed 9 --step 175000 --trace " + path("trace.json")) == 0);
    REQUIRE(run("attack --in " + path("marked.png") + " --out " + path("hit2.png") +
                " --replay " + path("trace.json")) == 0);
    RasterU8 a = load_png(path("hit.png"));
    CHECK(a.data == load_png(path("hit2.png")).data);
    CHECK(a.data != load_png(path("marked.png")).data);
}

TEST_CASE("cli locates a capture and decodes the rectification", "[cli]") {
    RasterU8 marked = load_png(path("marked.png"));
    Rng rng(7);
    Capture cap = synth_capture(marked, rng);
    save_png(path("capture.png"), cap.image);

    REQUIRE(run("locate --in " + path("capture.png") + " --out " + path("rect.png") +
                " --quad " + path("quad.json")) == 0);
    json quad = json::parse(slurp("quad.json"));
    REQUIRE(quad["corners"].size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(quad["corners"][i][0].get<double>() - cap.truth.corners[i].x) <= 3.0);
        CHECK(std::abs(quad["corners"][i][1].get<double>() - cap.truth.corners[i].y) <= 3.0);
    }

    REQUIRE(run("extract --in " + path("rect.png") + " --key " + kKey + " --truth " + kPayload) == 0);
    CHECK(out_json()["ber"].get<double>() == 0.0);

    save_png(path("flat.png"), RasterU8(128, 128, 3, 77));
    CHECK(run("locate --in " + path("flat.png")) == 2);
}

TEST_CASE("cli recover and anticrop extraction survive an edge crop", "[cli]") {
    RasterU8 marked = load_png(path("marked.png"));
    save_png(path("cropped.png"), crop(marked, 204, 0, marked.width - 204, marked.height));

    REQUIRE(run("recover --in " + path("cropped.png")) == 0);
    json rec = out_json();
    CHECK(rec["rects"].size() >= 2);

    REQUIRE(run("recover --in " + path("marked.png")) == 0);
    rec = out_json();
    CHECK(rec["axis_x"].get<int>() == 256);
    CHECK(rec["axis_y"].get<int>() == 256);
    CHECK(rec["rects"].size() == 4);

    REQUIRE(run("extract --in " + path("cropped.png") + " --key " + kKey + " --anticrop --truth " +
                kPayload) == 0);
    CHECK(out_json()["ber"].get<double>() == 0.0);
}

TEST_CASE("cli jnd sidecar carries the header and full float plane", "[cli]") {
    REQUIRE(run("jnd-map --in " + path("host.png") + " --out " + path("jnd.bin") +
                " --preview " + path("jnd.png")) == 0);
    std::string blob = slurp("jnd.bin");
    REQUIRE(blob.size() == 16 + 512 * 512 * 4);
    CHECK(blob.substr(0, 4) == "SMJD");
    std::uint32_t w = 0, h = 0;
    std::memcpy(&w, blob.data() + 4, 4);
    std::memcpy(&h, blob.data() + 8, 4);
    CHECK(w == 512);
    CHECK(h == 512);
    float first = 0.0f;
    std::memcpy(&first, blob.data() + 16, 4);
    CHECK(first > 0.0f);

    RasterU8 preview = load_png(path("jnd.png"));
    CHECK(preview.width == 512);
    CHECK(preview.channels == 1);
}

TEST_CASE("cli evaluate grid is deterministic across runs and workers", "[cli]") {
    const std::string grid = "evaluate --synth-count 2 --seeds 1,2 --crop 0:any --crop 0.40:left"
                             " --channel-steps 175000 ";
    REQUIRE(run(grid + "--out " + path("g1.csv") + " --workers 4") == 0);
    REQUIRE(run(grid + "--out " + path("g2.csv") + " --workers 1") == 0);

    const std::string c1 = slurp("g1.csv");
    CHECK(result_columns(c1) == result_columns(slurp("g2.csv")));
    CHECK(std::count(c1.begin(), c1.end(), '\n') == 1 + 2 * 2 * 3);

    json report = json::parse(slurp("g1.json"));
    CHECK(report["conditions"]["clean"]["ber_mean"].get<double>() == 0.0);
    CHECK(report["conditions"]["clean"]["failures"].get<int>() == 0);
    CHECK(report["conditions"]["crop=0.40:left"]["failures"].get<int>() == 0);
    CHECK(report["conditions"]["step=175000"]["rows"].get<int>() == 4);
}
