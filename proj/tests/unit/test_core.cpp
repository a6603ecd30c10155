#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "tempdir.hpp"
#include "voin/core/config.hpp"
#include "voin/core/error.hpp"
#include "voin/core/io.hpp"
#include "voin/core/rng.hpp"
#include "voin/core/sample.hpp"
#include "voin/core/validate.hpp"

using namespace voin;
using voin::testing::TempDir;
using voin::testing::read_file;

namespace {

VideoClip random_clip(std::uint64_t seed, int T, int H, int W) {
    Rng rng(seed);
    VideoClip clip;
    for (int t = 0; t < T; ++t) {
        Image img(H, W);
        for (auto& v : img.data) v = static_cast<float>(rng.uniform_int(0, 255) / 255.0);
        clip.frames.push_back(img);
    }
    return clip;
}

void write_raw(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

Sample consistent_sample(int T = 3, int H = 6, int W = 5) {
    Sample s;
    s.clip = random_clip(3, T, H, W);
    for (int t = 0; t < T; ++t) {
        Raster amo(H, W), vis(H, W), occ(H, W);
        for (int y = 1; y < 5; ++y) {
            for (int x = 1; x < 4; ++x) {
                amo.at(y, x) = 1;
                if (x + t != 3) vis.at(y, x) = 1;
                else occ.at(y, x) = 1;
            }
        }
        s.visible.masks.push_back(vis);
        s.amodal.masks.push_back(amo);
        s.occluded.masks.push_back(occ);
    }
    for (int t = 0; t + 1 < T; ++t) {
        s.flow_fwd.flows.emplace_back(H, W, 1.0f);
        s.flow_bwd.flows.emplace_back(H, W, -1.0f);
    }
    return s;
}

}  // namespace

TEST_CASE("load_clip reads black frames as zeros") {
    TempDir dir;
    const std::string frame = std::string("P6\n4 4\n255\n") + std::string(48, '\0');
    write_raw(dir / "frame_0000.ppm", frame);
    write_raw(dir / "frame_0001.ppm", frame);
    const VideoClip clip = load_clip(dir.path());
    CHECK(clip.length() == 2);
    CHECK(clip.height() == 4);
    CHECK(clip.width() == 4);
    for (const auto& f : clip.frames) {
        for (float v : f.data) CHECK(v == 0.0f);
    }
}

TEST_CASE("load_clip rejects a gap in the frame index") {
    TempDir dir;
    const std::string frame = std::string("P6\n2 2\n255\n") + std::string(12, '\0');
    write_raw(dir / "frame_0000.ppm", frame);
    write_raw(dir / "frame_0002.ppm", frame);
    CHECK_THROWS_AS(load_clip(dir.path()), GapError);
}

TEST_CASE("load_clip rejects mismatched dimensions and wrong magic") {
    TempDir dir;
    write_raw(dir / "frame_0000.ppm", std::string("P6\n2 2\n255\n") + std::string(12, '\0'));
    write_raw(dir / "frame_0001.ppm", std::string("P6\n3 2\n255\n") + std::string(18, '\0'));
    CHECK_THROWS_AS(load_clip(dir.path()), ShapeError);

    TempDir bad;
    write_raw(bad / "frame_0000.ppm", std::string("P3\n2 2\n255\n") + std::string(12, '\0'));
    CHECK_THROWS_AS(load_clip(bad.path()), FormatError);
}

TEST_CASE("save_clip quantizes half up") {
    TempDir dir;
    VideoClip clip;
    Image a(1, 2);
    a.at(0, 0, 0) = 1.0f;
    a.at(0, 1, 0) = 0.5f;
    clip.frames = {a, a};
    save_clip(clip, dir.path());
    const std::string bytes = read_file(dir / "frame_0000.ppm");
    const std::string header = "P6\n2 1\n255\n";
    REQUIRE(bytes.size() == header.size() + 6);
    CHECK(static_cast<unsigned char>(bytes[header.size()]) == 255);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 128);
    CHECK(quantize_unit(0.5) == 128);
    CHECK(quantize_unit(1.0) == 255);
    CHECK(quantize_unit(-0.2) == 0);
}

TEST_CASE("clip save/load round trip is byte-identical over random seeds") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TempDir a, b;
        save_clip(random_clip(seed, 3, 8, 8), a.path());
        const VideoClip loaded = load_clip(a.path());
        save_clip(loaded, b.path());
        for (int t = 0; t < 3; ++t) {
            const std::string name = "frame_000" + std::to_string(t) + ".ppm";
            CHECK(read_file(a / name) == read_file(b / name));
        }
        CHECK(load_clip(b.path()) == loaded);
        for (const auto& f : loaded.frames) {
            for (float v : f.data) CHECK((v >= 0.0f && v <= 1.0f));
        }
    }
}

TEST_CASE("masks binarize at 128 and round trip") {
    TempDir dir;
    std::string payload = "P5\n3 1\n255\n";
    payload += static_cast<char>(127);
    payload += static_cast<char>(128);
    payload += static_cast<char>(255);
    write_raw(dir / "0000.pgm", payload);
    const MaskSequence m = load_masks(dir.path());
    REQUIRE(m.length() == 1);
    CHECK(m.masks[0].at(0, 0) == 0);
    CHECK(m.masks[0].at(0, 1) == 1);
    CHECK(m.masks[0].at(0, 2) == 1);

    TempDir all;
    write_raw(all / "0000.pgm", std::string("P5\n2 2\n255\n") + std::string(4, '\xff'));
    const MaskSequence ones = load_masks(all.path());
    CHECK(ones.masks[0].count() == 4);

    Rng rng(9);
    MaskSequence seq{{}, MaskKind::amodal};
    for (int t = 0; t < 3; ++t) {
        Raster r(5, 7);
        for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
        seq.masks.push_back(r);
    }
    TempDir rt;
    save_masks(seq, rt.path());
    const MaskSequence back = load_masks(rt.path(), MaskKind::amodal);
    CHECK(back == seq);
}

TEST_CASE("flo layout is bit exact") {
    TempDir dir;
    FlowField f(1, 1);
    f.u(0, 0) = 3.0f;
    f.v(0, 0) = 4.0f;
    save_flow(f, dir / "a.flo");
    const std::string bytes = read_file(dir / "a.flo");
    REQUIRE(bytes.size() == 20);
    CHECK(bytes.substr(0, 4) == "PIEH");
    std::uint32_t w = 0, h = 0, ub = 0, vb = 0;
    std::memcpy(&w, bytes.data() + 4, 4);
    std::memcpy(&h, bytes.data() + 8, 4);
    std::memcpy(&ub, bytes.data() + 12, 4);
    std::memcpy(&vb, bytes.data() + 16, 4);
    CHECK(w == 1);
    CHECK(h == 1);
    CHECK(ub == std::bit_cast<std::uint32_t>(3.0f));
    CHECK(vb == std::bit_cast<std::uint32_t>(4.0f));
    CHECK(load_flow(dir / "a.flo") == f);
}

TEST_CASE("flo reader rejects bad magic and truncation") {
    TempDir dir;
    write_raw(dir / "bad.flo", std::string("PIEX") + std::string(16, '\0'));
    CHECK_THROWS_AS(load_flow(dir / "bad.flo"), FormatError);
    FlowField f(2, 2, 1.5f);
    save_flow(f, dir / "ok.flo");
    const std::string full = read_file(dir / "ok.flo");
    write_raw(dir / "short.flo", full.substr(0, full.size() - 3));
    CHECK_THROWS_AS(load_flow(dir / "short.flo"), FormatError);
}

TEST_CASE("flow round trip over random fields") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Rng rng(seed);
        FlowField f(8, 8);
        for (auto& v : f.uv) v = static_cast<float>(rng.uniform(-20, 20));
        TempDir dir;
        save_flow(f, dir / "f.flo");
        CHECK(load_flow(dir / "f.flo") == f);
    }
}

TEST_CASE("validate_sample accepts a consistent sample") {
    CHECK_NOTHROW(validate_sample(consistent_sample()));
}

TEST_CASE("validate_sample names the frame and pixel of a subset violation") {
    Sample s = consistent_sample();
    s.visible.masks[1].at(0, 0) = 1;
    try {
        validate_sample(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("subset") != std::string::npos);
        CHECK(msg.find("frame 1") != std::string::npos);
        CHECK(msg.find("x=0") != std::string::npos);
        CHECK(msg.find("y=0") != std::string::npos);
    }
}

TEST_CASE("validate_sample rejects occluded != amodal AND NOT visible") {
    Sample s = consistent_sample();
    s.occluded.masks[2].at(1, 1) ^= 1;
    CHECK_THROWS_AS(validate_sample(s), ValidationError);
}

TEST_CASE("validate_sample rejects flow of length T") {
    Sample s = consistent_sample();
    s.flow_fwd.flows.emplace_back(6, 5);
    try {
        validate_sample(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("length") != std::string::npos);
    }
}

TEST_CASE("validate_sample rejects single-frame clips and non-finite flow") {
    Sample s = consistent_sample();
    s.flow_bwd.flows[0].u(0, 0) = std::nanf("");
    CHECK_THROWS_AS(validate_sample(s), ValidationError);
    VideoClip one;
    one.frames.emplace_back(2, 2);
    CHECK_THROWS_AS(validate_clip(one), ValidationError);
}

TEST_CASE("sample directory round trip") {
    Sample s = consistent_sample();
    s.clip = quantized(s.clip);
    s.gt_clip = s.clip;
    s.object_class = 2;
    s.seed = 77;
    TempDir dir;
    save_sample(s, dir.path());
    const Sample back = load_sample(dir.path());
    CHECK(back.clip == s.clip);
    CHECK(back.gt_clip.has_value());
    CHECK(back.visible == s.visible);
    CHECK(back.occluded == s.occluded);
    CHECK(back.flow_fwd == s.flow_fwd);
    CHECK(back.flow_bwd == s.flow_bwd);
    CHECK(back.object_class == 2);
    CHECK(back.seed == 77);
    CHECK(fs::exists(dir / "clip/frame_0000.ppm"));
    CHECK(fs::exists(dir / "masks_occ/0002.pgm"));
    CHECK(fs::exists(dir / "flow_bwd/0001.flo"));
}

TEST_CASE("hyperparameter validation") {
    HyperParams hp;
    CHECK_NOTHROW(hp.validate(32, 32));
    hp.lambda3 = -1;
    CHECK_THROWS_AS(hp.validate(), ParameterError);
    hp = HyperParams{};
    hp.patch_r1 = 3;
    CHECK_THROWS_AS(hp.validate(32, 32), ParameterError);
    hp = HyperParams{};
    hp.cycle_threshold = 0;
    CHECK_THROWS_AS(hp.validate(), ParameterError);
}

TEST_CASE("flat config parsing") {
    const auto cfg = FlatConfig::parse("# comment\nsteps = 10\nlr=0.5\n\nname = a b\nflag = on\n");
    CHECK(cfg.get_int("steps", 0) == 10);
    CHECK(cfg.get_double("lr", 0) == 0.5);
    CHECK(cfg.get_string("name", "") == "a b");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_int("missing", 7) == 7);
    CHECK_THROWS_AS(cfg.require_known({"steps", "lr", "name"}), ConfigError);
    CHECK_NOTHROW(cfg.require_known({"steps", "lr", "name", "flag"}));
    CHECK_THROWS_AS(FlatConfig::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(FlatConfig::parse("x = abc").get_int("x", 0), ConfigError);
}
