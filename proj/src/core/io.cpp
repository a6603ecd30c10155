#include "voin/core/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <regex>
#include <string>

#include "voin/core/error.hpp"

namespace voin {

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& header, const std::uint8_t* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError("short write to " + path.string());
}

struct NetpbmHeader {
    int width = 0;
    int height = 0;
    std::size_t payload_offset = 0;
};

NetpbmHeader parse_netpbm(const std::vector<std::uint8_t>& bytes, const char* magic, const fs::path& path) {
    if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
        throw FormatError(path.string() + ": expected " + magic + " magic");
    }
    std::size_t pos = 2;
    auto next_int = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(path.string() + ": malformed header");
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1 << 20) throw FormatError(path.string() + ": header value out of range");
            ++pos;
        }
        return static_cast<int>(value);
    };
    NetpbmHeader h;
    h.width = next_int();
    h.height = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(path.string() + ": malformed header");
    h.payload_offset = pos + 1;
    if (h.width <= 0 || h.height <= 0) throw FormatError(path.string() + ": empty image");
    return h;
}

// Files named <prefix>NNNN<suffix>, keyed by index; rejects gaps.
std::vector<fs::path> indexed_files(const fs::path& dir, const std::string& prefix, const std::string& suffix) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    const std::regex pattern(prefix + "([0-9]+)" + std::regex_replace(suffix, std::regex(R"(\.)"), R"(\.)"));
    std::map<long, fs::path> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) found.emplace(std::stol(m[1].str()), entry.path());
    }
    std::vector<fs::path> paths;
    long expected = 0;
    for (const auto& [index, path] : found) {
        if (index != expected) {
            throw GapError(dir.string() + ": missing index " + std::to_string(expected) + " in " + prefix + "NNNN" + suffix);
        }
        paths.push_back(path);
        ++expected;
    }
    return paths;
}

std::string indexed_name(const std::string& prefix, int index, const std::string& suffix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return prefix + buf + suffix;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::uint8_t quantize_unit(double value) {
    const double scaled = std::floor(value * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Image read_ppm(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const auto h = parse_netpbm(bytes, "P6", path);
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
    if (bytes.size() < h.payload_offset + n) throw FormatError(path.string() + ": truncated payload");
    Image img(h.height, h.width);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<float>(bytes[h.payload_offset + i] / 255.0);
    return img;
}

void write_ppm(const Image& image, const fs::path& path) {
    std::vector<std::uint8_t> payload(image.data.size());
    std::transform(image.data.begin(), image.data.end(), payload.begin(), [](float v) { return quantize_unit(v); });
    const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    write_bytes(path, header, payload.data(), payload.size());
}

Raster read_pgm(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const auto h = parse_netpbm(bytes, "P5", path);
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() < h.payload_offset + n) throw FormatError(path.string() + ": truncated payload");
    Raster r(h.height, h.width);
    for (std::size_t i = 0; i < n; ++i) r.data[i] = bytes[h.payload_offset + i] >= 128 ? 1 : 0;
    return r;
}

void write_pgm(const Raster& raster, const fs::path& path) {
    std::vector<std::uint8_t> payload(raster.data.size());
    std::transform(raster.data.begin(), raster.data.end(), payload.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    const std::string header = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    write_bytes(path, header, payload.data(), payload.size());
}

FlowField load_flow(const fs::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "PIEH", 4) != 0) {
        throw FormatError(path.string() + ": bad .flo magic");
    }
    const auto w = static_cast<std::int32_t>(get_u32_le(bytes.data() + 4));
    const auto h = static_cast<std::int32_t>(get_u32_le(bytes.data() + 8));
    if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError(path.string() + ": bad .flo dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h * 2;
    if (bytes.size() < 12 + n * 4) throw FormatError(path.string() + ": truncated .flo payload");
    FlowField f(h, w);
    for (std::size_t i = 0; i < n; ++i) f.uv[i] = std::bit_cast<float>(get_u32_le(bytes.data() + 12 + 4 * i));
    return f;
}

void save_flow(const FlowField& flow, const fs::path& path) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + flow.uv.size() * 4);
    out.insert(out.end(), {'P', 'I', 'E', 'H'});
    put_u32_le(out, static_cast<std::uint32_t>(flow.width));
    put_u32_le(out, static_cast<std::uint32_t>(flow.height));
    for (float v : flow.uv) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    write_bytes(path, {}, out.data(), out.size());
}

VideoClip load_clip(const fs::path& dir) {
    VideoClip clip;
    for (const auto& path : indexed_files(dir, "frame_", ".ppm")) {
        Image img = read_ppm(path);
        if (!clip.frames.empty() && (img.height != clip.height() || img.width != clip.width())) {
            throw ShapeError(path.string() + ": frame dimensions differ from frame 0");
        }
        clip.frames.push_back(std::move(img));
    }
    if (clip.frames.empty()) throw GapError(dir.string() + ": no frame_0000.ppm");
    return clip;
}

void save_clip(const VideoClip& clip, const fs::path& dir) {
    ensure_dir(dir);
    for (int t = 0; t < clip.length(); ++t) write_ppm(clip.frames[t], dir / indexed_name("frame_", t, ".ppm"));
}

MaskSequence load_masks(const fs::path& dir, MaskKind kind) {
    MaskSequence seq{{}, kind};
    for (const auto& path : indexed_files(dir, "", ".pgm")) {
        Raster r = read_pgm(path);
        if (!seq.masks.empty() && (r.height != seq.masks[0].height || r.width != seq.masks[0].width)) {
            throw ShapeError(path.string() + ": mask dimensions differ from mask 0");
        }
        seq.masks.push_back(std::move(r));
    }
    return seq;
}

void save_masks(const MaskSequence& masks, const fs::path& dir) {
    ensure_dir(dir);
    for (int t = 0; t < masks.length(); ++t) write_pgm(masks.masks[t], dir / indexed_name("", t, ".pgm"));
}

FlowSequence load_flow_sequence(const fs::path& dir, FlowDirection direction) {
    FlowSequence seq{{}, direction};
    for (const auto& path : indexed_files(dir, "", ".flo")) seq.flows.push_back(load_flow(path));
    return seq;
}

void save_flow_sequence(const FlowSequence& flows, const fs::path& dir) {
    ensure_dir(dir);
    for (int t = 0; t < flows.length(); ++t) save_flow(flows.flows[t], dir / indexed_name("", t, ".flo"));
}

VideoClip quantized(const VideoClip& clip) {
    VideoClip out = clip;
    for (auto& frame : out.frames) {
        for (auto& v : frame.data) v = static_cast<float>(quantize_unit(v) / 255.0);
    }
    return out;
}

}  // namespace voin
