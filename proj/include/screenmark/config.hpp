#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "screenmark/channel.hpp"
#include "screenmark/codec.hpp"
#include "screenmark/raster.hpp"

namespace screenmark {

// ---------------------------------------------------------------------------
// Flat TOML-style configuration: [section] headers, key = value lines, and
// '#' comments. Keys inside a section are stored as "section.key". Values are
// numbers, true/false, or strings (optionally double-quoted). Later entries
// overwrite earlier ones, which lets callers layer overrides on a base file.

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.size() < 3 || s.back() != ']')
                    throw Error(ErrorCode::ParseError,
                                "config line " + std::to_string(line_no) + ": malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw Error(ErrorCode::ParseError,
                                "config line " + std::to_string(line_no) + ": empty section name");
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorCode::ParseError,
                            "config line " + std::to_string(line_no) + ": expected key = value");
            std::string key = trim(s.substr(0, eq));
            std::string value = trim(s.substr(eq + 1));
            if (key.empty())
                throw Error(ErrorCode::ParseError,
                            "config line " + std::to_string(line_no) + ": empty key");
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            cfg.entries_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error(ErrorCode::IoError, "config: cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::size_t size() const { return entries_.size(); }

    std::string get_string(const std::string& key, const std::string& fallback = {}) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(it->second, &used);
        } catch (const std::exception&) {
            throw bad_value(key, it->second, "number");
        }
        if (used != it->second.size())
            throw bad_value(key, it->second, "number");
        return v;
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(it->second, &used, 0);
        } catch (const std::exception&) {
            throw bad_value(key, it->second, "integer");
        }
        if (used != it->second.size())
            throw bad_value(key, it->second, "integer");
        return v;
    }

    int get_int(const std::string& key, int fallback) const {
        return static_cast<int>(get_long(key, fallback));
    }

    /// Unsigned 64-bit value; accepts decimal or 0x-prefixed hex.
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(it->second, &used, 0);
        } catch (const std::exception&) {
            throw bad_value(key, it->second, "unsigned integer");
        }
        if (used != it->second.size())
            throw bad_value(key, it->second, "unsigned integer");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw bad_value(key, it->second, "true/false");
    }

    /// Overlay [channel] keys onto an existing config; unknown keys throw.
    void apply(ChannelConfig& cc) const {
        for (const auto& [key, value] : entries_) {
            (void)value;
            if (key.rfind("channel.", 0) != 0) continue;
            const std::string name = key.substr(8);
            if (name == "seed") cc.seed = get_u64(key, cc.seed);
            else if (name == "step") cc.step = get_long(key, cc.step);
            else if (name == "total_steps") cc.total_steps = get_long(key, cc.total_steps);
            else if (name == "brightness_ramp_steps") cc.brightness_ramp_steps = get_long(key, cc.brightness_ramp_steps);
            else if (name == "brightness_max_offset") cc.brightness_max_offset = get_double(key, cc.brightness_max_offset);
            else if (name == "contrast_ramp_steps") cc.contrast_ramp_steps = get_long(key, cc.contrast_ramp_steps);
            else if (name == "contrast_max_deviation") cc.contrast_max_deviation = get_double(key, cc.contrast_max_deviation);
            else if (name == "saturation_ramp_steps") cc.saturation_ramp_steps = get_long(key, cc.saturation_ramp_steps);
            else if (name == "saturation_min_theta3") cc.saturation_min_theta3 = get_double(key, cc.saturation_min_theta3);
            else if (name == "noise_ramp_steps") cc.noise_ramp_steps = get_long(key, cc.noise_ramp_steps);
            else if (name == "noise_max_sigma") cc.noise_max_sigma = get_double(key, cc.noise_max_sigma);
            else if (name == "blur_ramp_steps") cc.blur_ramp_steps = get_long(key, cc.blur_ramp_steps);
            else if (name == "blur_max_kernel") cc.blur_max_kernel = get_int(key, cc.blur_max_kernel);
            else if (name == "blur_max_sigma") cc.blur_max_sigma = get_double(key, cc.blur_max_sigma);
            else if (name == "moire_probability") cc.moire_probability = get_double(key, cc.moire_probability);
            else if (name == "motion_blur_probability") cc.motion_blur_probability = get_double(key, cc.motion_blur_probability);
            else if (name == "moire_blur_sigma") cc.moire_blur_sigma = get_double(key, cc.moire_blur_sigma);
            else if (name == "moire_offset") cc.moire_offset = get_double(key, cc.moire_offset);
            else
                throw Error(ErrorCode::ParseError, "config: unknown channel key '" + name + "'");
        }
    }

    /// Overlay [embed] keys onto an existing config; unknown keys throw.
    void apply(EmbedConfig& ec) const {
        for (const auto& [key, value] : entries_) {
            (void)value;
            if (key.rfind("embed.", 0) != 0) continue;
            const std::string name = key.substr(6);
            if (name == "eta") ec.eta = get_double(key, ec.eta);
            else if (name == "per_bit_gain") ec.per_bit_gain = get_double(key, ec.per_bit_gain);
            else if (name == "sub_side") ec.sub_side = get_int(key, ec.sub_side);
            else if (name == "template_amplitude") ec.template_amplitude = get_double(key, ec.template_amplitude);
            else
                throw Error(ErrorCode::ParseError, "config: unknown embed key '" + name + "'");
        }
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return {};
        std::size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    /// Drop everything from the first '#' that is not inside double quotes.
    static std::string strip_comment(const std::string& s) {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') quoted = !quoted;
            else if (s[i] == '#' && !quoted) return s.substr(0, i);
        }
        return s;
    }

    static Error bad_value(const std::string& key, const std::string& value,
                           const std::string& kind) {
        return Error(ErrorCode::ParseError,
                     "config: key '" + key + "' needs a " + kind + ", got '" + value + "'");
    }

    std::map<std::string, std::string> entries_;
};

}  // namespace screenmark
