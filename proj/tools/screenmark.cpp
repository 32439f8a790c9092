#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "screenmark/anticrop.hpp"
#include "screenmark/channel.hpp"
#include "screenmark/codec.hpp"
#include "screenmark/config.hpp"
#include "screenmark/jnd.hpp"
#include "screenmark/locate.hpp"
#include "screenmark/metrics.hpp"
#include "screenmark/png_io.hpp"
#include "screenmark/synth.hpp"

using namespace screenmark;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 usage or codec error, 2 localization failure,
// 3 file I/O error.
int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::LocalizationFailed: return 2;
        case ErrorCode::IoError: return 3;
        default: return 1;
    }
}

std::uint64_t parse_key(const std::string& text) {
    try {
        std::size_t used = 0;
        const std::uint64_t key = std::stoull(text, &used, 16);
        if (used != text.size())
            throw Error(ErrorCode::ParseError, "key must be a 64-bit hex value");
        return key;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "key must be a 64-bit hex value");
    }
}

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

/**
 * Payloads travel as 32 hex characters = 128 bits whose leading bit is
 * padding; the remaining 127 are the message. A set leading bit is cleared
 * rather than rejected so round-tripped values always reparse.
 */
BitString payload_from_hex(const std::string& hex) {
    if (hex.size() != 32)
        throw Error(ErrorCode::PayloadLengthMismatch, "payload must be exactly 32 hex characters");
    BitString bits(kPayloadBits);
    for (int i = 0; i < 32; ++i) {
        const int v = hex_nibble(hex[i]);
        if (v < 0)
            throw Error(ErrorCode::ParseError, "payload contains a non-hex character");
        for (int b = 0; b < 4; ++b) {
            const int pos = i * 4 + b;  // bit 0 is the dropped pad bit
            if (pos == 0) continue;
            bits.bits[pos - 1] = (v >> (3 - b)) & 1;
        }
    }
    return bits;
}

std::string payload_to_hex(const BitString& bits) {
    std::string hex;
    hex.reserve(32);
    for (int i = 0; i < 32; ++i) {
        int v = 0;
        for (int b = 0; b < 4; ++b) {
            const int pos = i * 4 + b;
            const int bit = pos == 0 ? 0 : bits[pos - 1];
            v = (v << 1) | bit;
        }
        hex.push_back("0123456789abcdef"[v]);
    }
    return hex;
}

/// Payload file: 127 characters '0'/'1', whitespace ignored.
BitString payload_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open payload file " + path);
    BitString bits(kPayloadBits);
    std::size_t n = 0;
    char c = 0;
    while (in.get(c)) {
        if (c == '0' || c == '1') {
            if (n >= kPayloadBits)
                throw Error(ErrorCode::PayloadLengthMismatch, "payload file has more than 127 bits");
            bits.bits[n++] = c == '1';
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            throw Error(ErrorCode::ParseError, "payload file may contain only 0, 1 and whitespace");
        }
    }
    if (n != kPayloadBits)
        throw Error(ErrorCode::PayloadLengthMismatch, "payload file must hold exactly 127 bits");
    return bits;
}

Config load_config_if(const std::string& path) {
    return path.empty() ? Config() : Config::load(path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "short write to " + path);
}

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad JSON in ") + path + ": " + e.what());
    }
    return j;
}

const char* blur_kind_name(BlurKind k) {
    switch (k) {
        case BlurKind::None: return "none";
        case BlurKind::Defocus: return "defocus";
        case BlurKind::Motion: return "motion";
    }
    return "none";
}

BlurKind blur_kind_from(const std::string& name) {
    if (name == "none") return BlurKind::None;
    if (name == "defocus") return BlurKind::Defocus;
    if (name == "motion") return BlurKind::Motion;
    throw Error(ErrorCode::ParseError, "unknown blur kind '" + name + "'");
}

// 64-bit seeds are serialized as decimal strings; JSON numbers cannot carry
// them without loss above 2^53.
json trace_to_json(const DistortionTrace& t) {
    return json{{"theta1", t.theta1},
                {"theta2", t.theta2},
                {"theta3", t.theta3},
                {"blur_kind", blur_kind_name(t.blur_kind)},
                {"blur_n", t.blur_n},
                {"blur_sigma", t.blur_sigma},
                {"blur_theta", t.blur_theta},
                {"moire_applied", t.moire_applied},
                {"moire_seed", std::to_string(t.moire_seed)},
                {"moire_offset", t.moire_offset},
                {"moire_blur_sigma", t.moire_blur_sigma},
                {"noise_sigma", t.noise_sigma},
                {"noise_seed", std::to_string(t.noise_seed)}};
}

DistortionTrace trace_from_json(const json& j) {
    DistortionTrace t;
    try {
        t.theta1 = j.at("theta1").get<double>();
        t.theta2 = j.at("theta2").get<double>();
        t.theta3 = j.at("theta3").get<double>();
        t.blur_kind = blur_kind_from(j.at("blur_kind").get<std::string>());
        t.blur_n = j.at("blur_n").get<int>();
        t.blur_sigma = j.at("blur_sigma").get<double>();
        t.blur_theta = j.at("blur_theta").get<double>();
        t.moire_applied = j.at("moire_applied").get<bool>();
        t.moire_seed = std::stoull(j.at("moire_seed").get<std::string>());
        t.moire_offset = j.at("moire_offset").get<double>();
        t.moire_blur_sigma = j.at("moire_blur_sigma").get<double>();
        t.noise_sigma = j.at("noise_sigma").get<double>();
        t.noise_seed = std::stoull(j.at("noise_seed").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("trace JSON missing field: ") + e.what());
    }
    return t;
}

RasterU8 crop_edge(const RasterU8& img, double gamma, const std::string& edge) {
    const int cut_w = static_cast<int>(gamma * img.width);
    const int cut_h = static_cast<int>(gamma * img.height);
    if (edge == "left") return crop(img, cut_w, 0, img.width - cut_w, img.height);
    if (edge == "right") return crop(img, 0, 0, img.width - cut_w, img.height);
    if (edge == "top") return crop(img, 0, cut_h, img.width, img.height - cut_h);
    if (edge == "bottom") return crop(img, 0, 0, img.width, img.height - cut_h);
    throw Error(ErrorCode::ParseError, "edge must be left, right, top or bottom");
}

/// Stretch to the decoder frame with a corner-to-corner homography.
RasterU8 stretch_to_square(const RasterU8& img, int side) {
    const Quad src{{Point{0, 0}, Point{img.width - 1.0, 0},
                    Point{img.width - 1.0, img.height - 1.0}, Point{0, img.height - 1.0}}};
    const Quad dst{{Point{0, 0}, Point{side - 1.0, 0}, Point{side - 1.0, side - 1.0},
                    Point{0, side - 1.0}}};
    return warp_perspective(img, homography_from_quads(src, dst), side, side);
}

double elapsed_ms(std::chrono::steady_clock::time_point from) {
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration_cast<std::chrono::microseconds>(now - from).count() / 1000.0;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

struct EmbedArgs {
    std::string in, out, payload_hex, payload_file, key_hex, config_path;
};

int cmd_embed(const EmbedArgs& a) {
    const BitString payload = a.payload_file.empty() ? payload_from_hex(a.payload_hex)
                                                     : payload_from_file(a.payload_file);
    EmbedConfig ec;
    load_config_if(a.config_path).apply(ec);
    const std::uint64_t key = parse_key(a.key_hex);

    const RasterU8 host = load_png(a.in);
    const RasterF jnd = jnd_map(to_grayscale(host));
    const RasterU8 marked = embed(host, payload, key, jnd, ec);
    save_png(a.out, marked);

    const json report{{"psnr", psnr(host, marked)}, {"ssim", ssim(host, marked)}};
    std::cout << report.dump(2) << "\n";
    return 0;
}

struct AttackArgs {
    std::string in, out, config_path, trace_out, replay_path;
    std::uint64_t seed = 1;
    long step = -1;
};

int cmd_attack(const AttackArgs& a) {
    const RasterU8 img = load_png(a.in);
    if (!a.replay_path.empty()) {
        const RasterU8 out = replay_channel(img, trace_from_json(read_json(a.replay_path)));
        save_png(a.out, out);
        return 0;
    }
    ChannelConfig cc;
    load_config_if(a.config_path).apply(cc);
    cc.seed = a.seed;
    if (a.step >= 0) cc.step = a.step;
    Rng rng(cc.seed);
    auto [attacked, trace] = apply_channel(img, cc, rng);
    save_png(a.out, attacked);
    if (!a.trace_out.empty())
        write_text(a.trace_out, trace_to_json(trace).dump(2) + "\n");
    return 0;
}

struct LocateArgs {
    std::string in, out, quad_out;
};

int cmd_locate(const LocateArgs& a) {
    const RasterU8 capture = load_png(a.in);
    const LocateResult res = locate_and_rectify(capture);
    if (!a.out.empty())
        save_png(a.out, res.rectified);
    json corners = json::array();
    for (const Point& p : res.quad.corners)
        corners.push_back(json::array({p.x, p.y}));
    json quad{{"corners", corners}};
    if (res.recall_estimate)
        quad["recall_estimate"] = *res.recall_estimate;
    if (!a.quad_out.empty())
        write_text(a.quad_out, quad.dump(2) + "\n");
    else
        std::cout << quad.dump(2) << "\n";
    return 0;
}

struct ExtractArgs {
    std::string in, key_hex, truth_hex, truth_file, config_path;
    bool anticrop = false;
};

int cmd_extract(const ExtractArgs& a) {
    EmbedConfig ec;
    load_config_if(a.config_path).apply(ec);
    const std::uint64_t key = parse_key(a.key_hex);
    const RasterU8 img = load_png(a.in);

    BitString bits(kPayloadBits);
    if (a.anticrop) {
        bits = decode_with_anticrop(img, key, ec).bits;
    } else {
        bits = extract(img, key, ec).bits;
    }
    json out{{"payload", payload_to_hex(bits)}};
    if (!a.truth_hex.empty() || !a.truth_file.empty()) {
        const BitString truth = a.truth_file.empty() ? payload_from_hex(a.truth_hex)
                                                     : payload_from_file(a.truth_file);
        out["ber"] = ber(truth, bits);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct RecoverArgs {
    std::string in, out;
    int sub_side = 256;
};

int cmd_recover(const RecoverArgs& a) {
    const RasterU8 img = load_png(a.in);
    const CropBounds bounds = recover_subimages(img, a.sub_side);
    json rects = json::array();
    for (const SubImageRect& r : bounds.rects)
        rects.push_back(json{{"x", r.x}, {"y", r.y}, {"side", r.side},
                             {"quadrant", quadrant_name(r.quadrant)}});
    const json out{{"axis_x", bounds.axis_x}, {"axis_y", bounds.axis_y}, {"rects", rects}};
    if (!a.out.empty())
        write_text(a.out, out.dump(2) + "\n");
    else
        std::cout << out.dump(2) << "\n";
    return 0;
}

struct JndArgs {
    std::string in, out, preview;
};

// Sidecar layout: "SMJD", u32 width, u32 height, u32 zero, then row-major
// float32 thresholds; all fields little-endian.
int cmd_jnd_map(const JndArgs& a) {
    const RasterU8 img = load_png(a.in);
    const RasterF jnd = jnd_map(img.channels == 3 ? to_grayscale(img) : img);

    std::ofstream out(a.out, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open " + a.out + " for writing");
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(jnd.width),
                                     static_cast<std::uint32_t>(jnd.height), 0};
    out.write("SMJD", 4);
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(jnd.data.data()),
              static_cast<std::streamsize>(jnd.data.size() * sizeof(float)));
    if (!out)
        throw Error(ErrorCode::IoError, "short write to " + a.out);

    if (!a.preview.empty()) {
        RasterU8 vis(jnd.width, jnd.height, 1);
        for (std::size_t i = 0; i < vis.data.size(); ++i)
            vis.data[i] = clamp_round_u8(8.0 * jnd.data[i]);
        save_png(a.preview, vis);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate: the full grid harness

struct EvaluateArgs {
    std::string corpus_dir, out_csv, out_json, config_path, dump_dir;
    std::vector<std::uint64_t> seeds{1};
    std::vector<long> channel_steps;
    std::vector<std::string> crops;  // "gamma:edge"
    int synth_count = 20;
    int workers = 0;
};

struct Condition {
    std::string label;
    enum class Kind { Clean, Channel, Crop } kind = Kind::Clean;
    long step = 0;
    double gamma = 0.0;
    std::string edge;
};

struct Row {
    std::string image_id;
    std::uint64_t seed = 0;
    std::string condition;
    double psnr_db = 0, ssim_v = 0, ber_v = 0;
    double embed_ms = 0, attack_ms = 0, locate_ms = 0, extract_ms = 0;
    std::string error;
    bool failed = false;
};

std::vector<Condition> parse_conditions(const EvaluateArgs& a) {
    std::vector<Condition> conds;
    for (long step : a.channel_steps) {
        Condition c;
        c.kind = Condition::Kind::Channel;
        c.step = step;
        c.label = "step=" + std::to_string(step);
        conds.push_back(c);
    }
    for (const std::string& spec : a.crops) {
        const std::size_t colon = spec.find(':');
        if (colon == std::string::npos)
            throw Error(ErrorCode::ParseError, "crop spec must look like 0.40:left");
        Condition c;
        c.gamma = std::stod(spec.substr(0, colon));
        c.edge = spec.substr(colon + 1);
        if (c.gamma < 0.0 || c.gamma > 0.75)
            throw Error(ErrorCode::OutOfRange, "crop fraction must lie in [0, 0.75]");
        if (c.gamma == 0.0) {
            c.kind = Condition::Kind::Clean;
            c.label = "clean";
        } else {
            c.kind = Condition::Kind::Crop;
            c.label = "crop=" + spec.substr(0, colon) + ":" + c.edge;
            crop_edge(RasterU8(16, 16, 3), 0.0, c.edge);  // validate the edge name
        }
        conds.push_back(c);
    }
    if (conds.empty()) {
        Condition c;
        c.label = "clean";
        conds.push_back(c);
    }
    return conds;
}

std::vector<std::pair<std::string, RasterU8>> load_corpus(const EvaluateArgs& a) {
    std::vector<std::pair<std::string, RasterU8>> corpus;
    if (a.corpus_dir.empty()) {
        for (int i = 0; i < a.synth_count; ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "synth-%02d", i);
            corpus.emplace_back(id, synth_texture(i));
        }
        return corpus;
    }
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(a.corpus_dir, ec))
        if (entry.path().extension() == ".png")
            files.push_back(entry.path());
    if (ec)
        throw Error(ErrorCode::IoError, "cannot list corpus directory " + a.corpus_dir);
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        corpus.emplace_back(f.filename().string(), load_png(f.string()));
    if (corpus.empty())
        throw Error(ErrorCode::IoError, "corpus directory holds no .png files");
    return corpus;
}

Row run_cell(const RasterU8& host, const std::string& image_id, std::size_t image_index,
             std::uint64_t seed, const Condition& cond, const Config& cfg) {
    Row row;
    row.image_id = image_id;
    row.seed = seed;
    row.condition = cond.label;

    // One generator per cell, derived from (seed, image); results do not
    // depend on which worker executes the cell.
    Rng rng(derive_seed(seed, image_index));
    try {
        EmbedConfig ec;
        cfg.apply(ec);
        const std::uint64_t key = rng.next_u64();
        BitString payload(kPayloadBits);
        for (std::size_t i = 0; i < payload.size(); ++i) payload.bits[i] = rng.bernoulli(0.5);

        auto t0 = std::chrono::steady_clock::now();
        const RasterF jnd = jnd_map(to_grayscale(host));
        const RasterU8 marked = embed(host, payload, key, jnd, ec);
        row.embed_ms = elapsed_ms(t0);
        row.psnr_db = psnr(host, marked);
        row.ssim_v = ssim(host, marked);

        BitString decoded(kPayloadBits);
        if (cond.kind == Condition::Kind::Channel) {
            ChannelConfig cc;
            cfg.apply(cc);
            cc.step = cond.step;
            cc.seed = rng.next_u64();
            Rng crng(cc.seed);
            t0 = std::chrono::steady_clock::now();
            auto [attacked, trace] = apply_channel(marked, cc, crng);
            row.attack_ms = elapsed_ms(t0);

            t0 = std::chrono::steady_clock::now();
            const LocateResult res = locate_and_rectify(attacked);
            row.locate_ms = elapsed_ms(t0);

            t0 = std::chrono::steady_clock::now();
            decoded = extract(res.rectified, key, ec).bits;
            row.extract_ms = elapsed_ms(t0);
        } else if (cond.kind == Condition::Kind::Crop) {
            t0 = std::chrono::steady_clock::now();
            const RasterU8 cropped = crop_edge(marked, cond.gamma, cond.edge);
            row.attack_ms = elapsed_ms(t0);

            t0 = std::chrono::steady_clock::now();
            decoded = decode_with_anticrop(cropped, key, ec).bits;
            row.extract_ms = elapsed_ms(t0);
        } else {
            t0 = std::chrono::steady_clock::now();
            const LocateResult res = locate_and_rectify(marked);
            row.locate_ms = elapsed_ms(t0);

            t0 = std::chrono::steady_clock::now();
            decoded = extract(res.rectified, key, ec).bits;
            row.extract_ms = elapsed_ms(t0);
        }
        row.ber_v = ber(payload, decoded);
    } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
    }
    return row;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n == 0 ? 0.0 : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
}

int cmd_evaluate(const EvaluateArgs& a) {
    const Config cfg = load_config_if(a.config_path);
    const auto corpus = load_corpus(a);
    const auto conditions = parse_conditions(a);

    if (!a.dump_dir.empty()) {
        std::filesystem::create_directories(a.dump_dir);
        for (const auto& [id, img] : corpus) {
            std::filesystem::path name(id);
            if (name.extension() != ".png") name += ".png";
            save_png((std::filesystem::path(a.dump_dir) / name).string(), img);
        }
    }

    struct Cell {
        std::size_t image;
        std::uint64_t seed;
        std::size_t cond;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::uint64_t seed : a.seeds)
            for (std::size_t c = 0; c < conditions.size(); ++c)
                cells.push_back({i, seed, c});

    int workers = a.workers;
    if (const char* env = std::getenv("SCREENMARK_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) workers = n;
    }
    if (workers <= 0)
        workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp<int>(workers, 1, static_cast<int>(cells.size()));

    std::vector<Row> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            rows[i] = run_cell(corpus[cell.image].second, corpus[cell.image].first, cell.image,
                               cell.seed, conditions[cell.cond], cfg);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers - 1; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // CSV: one row per grid cell, stable order, fixed formatting.
    std::string csv = "image,seed,condition,psnr,ssim,ber,embed_ms,attack_ms,locate_ms,extract_ms,error\n";
    char buf[256];
    for (const Row& r : rows) {
        csv += csv_escape(r.image_id) + "," + std::to_string(r.seed) + "," + csv_escape(r.condition) + ",";
        if (r.failed) {
            csv += ",,,";
        } else {
            std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f,", r.psnr_db, r.ssim_v, r.ber_v);
            csv += buf;
        }
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.3f,%.3f,", r.embed_ms, r.attack_ms,
                      r.locate_ms, r.extract_ms);
        csv += buf;
        csv += csv_escape(r.error) + "\n";
    }
    write_text(a.out_csv, csv);

    json aggregates;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        std::vector<double> psnrs, ssims, bers;
        double embed_ms = 0, attack_ms = 0, locate_ms = 0, extract_ms = 0;
        int ok = 0, failed = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].cond != c) continue;
            const Row& r = rows[i];
            if (r.failed) {
                ++failed;
                continue;
            }
            ++ok;
            psnrs.push_back(r.psnr_db);
            ssims.push_back(r.ssim_v);
            bers.push_back(r.ber_v);
            embed_ms += r.embed_ms;
            attack_ms += r.attack_ms;
            locate_ms += r.locate_ms;
            extract_ms += r.extract_ms;
        }
        json agg{{"rows", ok + failed}, {"failures", failed}};
        if (ok > 0) {
            double psum = 0, ssum = 0, bsum = 0;
            for (double v : psnrs) psum += v;
            for (double v : ssims) ssum += v;
            for (double v : bers) bsum += v;
            agg["psnr_mean"] = psum / ok;
            agg["ssim_mean"] = ssum / ok;
            agg["ber_mean"] = bsum / ok;
            agg["ber_median"] = median_of(bers);
            agg["embed_ms_mean"] = embed_ms / ok;
            agg["attack_ms_mean"] = attack_ms / ok;
            agg["locate_ms_mean"] = locate_ms / ok;
            agg["extract_ms_mean"] = extract_ms / ok;
        }
        aggregates[conditions[c].label] = agg;
    }
    const json report{{"images", corpus.size()},
                      {"seeds", a.seeds},
                      {"conditions", aggregates}};
    const std::string json_path =
        a.out_json.empty() ? std::filesystem::path(a.out_csv).replace_extension(".json").string()
                           : a.out_json;
    write_text(json_path, report.dump(2) + "\n");
    std::cout << "wrote " << rows.size() << " rows to " << a.out_csv << " and aggregates to "
              << json_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"screen-shooting robust watermarking toolkit"};
    app.require_subcommand(1);

    EmbedArgs embed_args;
    CLI::App* embed_cmd = app.add_subcommand("embed", "watermark a host image");
    embed_cmd->add_option("--in", embed_args.in, "host PNG (3-channel, 512x512 at defaults)")
        ->required()
        ->check(CLI::ExistingFile);
    embed_cmd->add_option("--out", embed_args.out, "watermarked PNG")->required();
    auto* hex_opt = embed_cmd->add_option("--payload", embed_args.payload_hex,
                                          "payload as 32 hex chars (leading bit is padding)");
    embed_cmd->add_option("--payload-file", embed_args.payload_file,
                          "file of 127 '0'/'1' characters")
        ->excludes(hex_opt)
        ->check(CLI::ExistingFile);
    embed_cmd->add_option("--key", embed_args.key_hex, "64-bit hex key")->required();
    embed_cmd->add_option("--config", embed_args.config_path, "TOML-style config file")
        ->check(CLI::ExistingFile);

    AttackArgs attack_args;
    CLI::App* attack_cmd = app.add_subcommand("attack", "push an image through the simulated channel");
    attack_cmd->add_option("--in", attack_args.in, "input PNG")->required()->check(CLI::ExistingFile);
    attack_cmd->add_option("--out", attack_args.out, "distorted PNG")->required();
    attack_cmd->add_option("--seed", attack_args.seed, "channel seed");
    attack_cmd->add_option("--step", attack_args.step, "severity schedule step");
    attack_cmd->add_option("--config", attack_args.config_path, "TOML-style config file")
        ->check(CLI::ExistingFile);
    attack_cmd->add_option("--trace", attack_args.trace_out, "write the distortion trace JSON here");
    attack_cmd->add_option("--replay", attack_args.replay_path,
                           "replay a recorded trace instead of sampling")
        ->check(CLI::ExistingFile);

    LocateArgs locate_args;
    CLI::App* locate_cmd = app.add_subcommand("locate", "find and rectify the marked region");
    locate_cmd->add_option("--in", locate_args.in, "captured PNG")->required()->check(CLI::ExistingFile);
    locate_cmd->add_option("--out", locate_args.out, "rectified PNG");
    locate_cmd->add_option("--quad", locate_args.quad_out, "write corner JSON here (default stdout)");

    ExtractArgs extract_args;
    CLI::App* extract_cmd = app.add_subcommand("extract", "decode the payload");
    extract_cmd->add_option("--in", extract_args.in, "rectified or cropped PNG")
        ->required()
        ->check(CLI::ExistingFile);
    extract_cmd->add_option("--key", extract_args.key_hex, "64-bit hex key")->required();
    extract_cmd->add_flag("--anticrop", extract_args.anticrop,
                          "recover sub-images from the symmetry template first");
    extract_cmd->add_option("--truth", extract_args.truth_hex, "true payload hex; reports BER");
    extract_cmd->add_option("--truth-file", extract_args.truth_file, "true payload bit file")
        ->check(CLI::ExistingFile);
    extract_cmd->add_option("--config", extract_args.config_path, "TOML-style config file")
        ->check(CLI::ExistingFile);

    RecoverArgs recover_args;
    CLI::App* recover_cmd =
        app.add_subcommand("recover", "list complete sub-images in a cropped capture");
    recover_cmd->add_option("--in", recover_args.in, "cropped PNG")->required()->check(CLI::ExistingFile);
    recover_cmd->add_option("--out", recover_args.out, "write rectangle JSON here (default stdout)");
    recover_cmd->add_option("--sub-side", recover_args.sub_side, "sub-image side length");

    JndArgs jnd_args;
    CLI::App* jnd_cmd = app.add_subcommand("jnd-map", "compute the perceptual threshold map");
    jnd_cmd->add_option("--in", jnd_args.in, "input PNG")->required()->check(CLI::ExistingFile);
    jnd_cmd->add_option("--out", jnd_args.out, "float32 sidecar path")->required();
    jnd_cmd->add_option("--preview", jnd_args.preview, "optional 8x-scaled PNG visualization");

    EvaluateArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "run the full experiment grid");
    eval_cmd->add_option("--corpus", eval_args.corpus_dir,
                         "directory of host PNGs (default: built-in synthetic set)")
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--synth-count", eval_args.synth_count,
                         "number of built-in textures when no corpus is given");
    eval_cmd->add_option("--dump-corpus", eval_args.dump_dir,
                         "also write the corpus images as PNGs into this directory");
    eval_cmd->add_option("--out", eval_args.out_csv, "CSV report path")->required();
    eval_cmd->add_option("--json", eval_args.out_json, "aggregate JSON path (default: CSV sibling)");
    eval_cmd->add_option("--seeds", eval_args.seeds, "seeds to run")->delimiter(',');
    eval_cmd->add_option("--channel-steps", eval_args.channel_steps,
                         "channel severity steps, one condition each")
        ->delimiter(',');
    eval_cmd->add_option("--crop", eval_args.crops,
                         "crop conditions as gamma:edge (0:any = clean)");
    eval_cmd->add_option("--workers", eval_args.workers,
                         "worker threads (SCREENMARK_THREADS overrides; 0 = all cores)");
    eval_cmd->add_option("--config", eval_args.config_path, "TOML-style config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (embed_cmd->parsed()) {
            if (embed_args.payload_hex.empty() && embed_args.payload_file.empty())
                throw Error(ErrorCode::ParseError, "embed needs --payload or --payload-file");
            return cmd_embed(embed_args);
        }
        if (attack_cmd->parsed()) return cmd_attack(attack_args);
        if (locate_cmd->parsed()) return cmd_locate(locate_args);
        if (extract_cmd->parsed()) return cmd_extract(extract_args);
        if (recover_cmd->parsed()) return cmd_recover(recover_args);
        if (jnd_cmd->parsed()) return cmd_jnd_map(jnd_args);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
