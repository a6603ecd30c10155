#include <doctest.h>

#include "voin/core/error.hpp"
#include "voin/propagate/propagate.hpp"
#include "voin/synth/benchmark.hpp"

using namespace voin;
using namespace voin::propagate;

namespace {

Image ramp(int H, int W) {
    Image img(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(x) / W;
    return img;
}

FlowSequence constant_flows(int T, int H, int W, float u, float v, FlowDirection dir) {
    FlowSequence s{{}, dir};
    for (int t = 0; t + 1 < T; ++t) {
        FlowField f(H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                f.u(y, x) = u;
                f.v(y, x) = v;
            }
        s.flows.push_back(f);
    }
    return s;
}

// Scene moving by (2, 1) px/frame, occluded only in frame 1.
struct ThreeFrame {
    VideoClip gt;
    VideoClip corrupted;
    MaskSequence amodal{{}, MaskKind::amodal};
    MaskSequence occluded{{}, MaskKind::occluded};
    FlowSequence fwd, bwd;
};

ThreeFrame three_frame_case() {
    synth::SceneSpec s;
    s.height = 24;
    s.width = 24;
    s.length = 3;
    s.shape.kind = synth::ShapeKind::ellipse;
    s.shape.center_x = 10.25;
    s.shape.center_y = 11.0;
    s.shape.radius_x = 5;
    s.shape.radius_y = 4;
    s.object_texture.kind = synth::TextureKind::noise;
    s.object_texture.seed = 9;
    s.trajectory = {2, 1, 0, 0};
    const auto r = synth::render_scene(s);
    ThreeFrame c;
    c.gt = r.gt_clip;
    c.corrupted = r.gt_clip;
    c.amodal = r.amodal;
    c.fwd = r.flow_fwd;
    c.bwd = r.flow_bwd;
    for (int t = 0; t < 3; ++t) {
        Raster occ(24, 24);
        if (t == 1) {
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 24; ++x)
                    if (c.amodal.masks[1].at(y, x) && x >= 11 && x <= 14) {
                        occ.at(y, x) = 1;
                        for (int ch = 0; ch < 3; ++ch) c.corrupted.frames[1].at(y, x, ch) = 1.0f;
                    }
        }
        c.occluded.masks.push_back(occ);
    }
    return c;
}

bool subset(const Raster& a, const Raster& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] && !b.data[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("zero flow warp is the identity") {
    const Image img = ramp(4, 5);
    Raster valid(4, 5, 1);
    valid.at(2, 2) = 0;
    const Warped w = warp_bilinear(img, FlowField(4, 5), valid);
    CHECK(w.image == img);
    CHECK(w.valid == valid);
}

TEST_CASE("integer warp shifts exactly and invalidates the right column") {
    const Image img = ramp(3, 6);
    FlowField f(3, 6, 0.0f);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 6; ++x) f.u(y, x) = 1.0f;
    const Warped w = warp_bilinear(img, f, Raster(3, 6, 1));
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 5; ++x) {
            CHECK(w.valid.at(y, x) == 1);
            CHECK(w.image.at(y, x, 0) == img.at(y, x + 1, 0));
        }
        CHECK(w.valid.at(y, 5) == 0);
    }
}

TEST_CASE("half-pixel warp takes the midpoint") {
    Image img(1, 2);
    img.at(0, 1, 0) = 1.0f;
    FlowField f(1, 2);
    f.u(0, 0) = 0.5f;
    const Warped w = warp_bilinear(img, f, Raster(1, 2, 1));
    CHECK(w.image.at(0, 0, 0) == doctest::Approx(0.5));
    CHECK(w.valid.at(0, 0) == 1);
    CHECK(w.valid.at(0, 1) == 1);  // zero flow at x=1
}

TEST_CASE("cycle consistency examples") {
    const auto fwd = constant_flows(2, 16, 16, 3, 4, FlowDirection::forward).flows[0];
    const auto bwd = constant_flows(2, 16, 16, -3, -4, FlowDirection::backward).flows[0];
    CHECK(cycle_consistency_mask(fwd, bwd, 5.0).count() == 256);
    const auto six = constant_flows(2, 16, 16, 6, 0, FlowDirection::forward).flows[0];
    CHECK(cycle_consistency_mask(six, FlowField(16, 16), 5.0).count() == 0);
    CHECK(cycle_consistency_mask(FlowField(16, 16), FlowField(16, 16), 5.0).count() == 256);
    CHECK_THROWS_AS(cycle_consistency_mask(fwd, bwd, 0.0), ParameterError);
}

TEST_CASE("three-frame case fills every occluded pixel with ground truth") {
    const ThreeFrame c = three_frame_case();
    REQUIRE(c.occluded.masks[1].count() > 0);
    const auto out = propagate_pixels(initial_state(c.corrupted, c.occluded), c.fwd, c.bwd, c.amodal);
    const auto hole = remaining_hole_mask(out, c.amodal);
    for (const auto& h : hole.masks) CHECK(h.count() == 0);
    CHECK(out.frames == c.gt);
    CHECK(out.filled_by_flow[1] == c.occluded.masks[1]);
}

TEST_CASE("zero flow with a static hole fills nothing") {
    const ThreeFrame c = three_frame_case();
    MaskSequence occ{{}, MaskKind::occluded};
    for (int t = 0; t < 3; ++t) occ.masks.push_back(c.occluded.masks[1]);
    MaskSequence amo{{}, MaskKind::amodal};
    for (int t = 0; t < 3; ++t) amo.masks.push_back(c.amodal.masks[1]);
    const auto zf = constant_flows(3, 24, 24, 0, 0, FlowDirection::forward);
    const auto zb = constant_flows(3, 24, 24, 0, 0, FlowDirection::backward);
    const auto out = propagate_pixels(initial_state(c.corrupted, occ), zf, zb, amo);
    const auto hole = remaining_hole_mask(out, amo);
    for (int t = 0; t < 3; ++t) CHECK(hole.masks[t] == occ.masks[t]);
    CHECK(out.frames == c.corrupted);
}

TEST_CASE("propagation properties on synthetic samples") {
    synth::SynthConfig cfg;
    cfg.length = 6;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto ss = synth::synth_one(cfg, seed * 977, static_cast<int>(seed % 4), 0.35);
        const Sample& s = ss.sample;
        const auto init = initial_state(s.clip, s.occluded);

        PropagationState prev = init;
        for (int k = 1; k <= 8; ++k) {
            const auto cur = propagate_pixels(init, s.flow_fwd, s.flow_bwd, s.amodal, 5.0, k);
            for (int t = 0; t < s.clip.length(); ++t) CHECK(subset(prev.known[t], cur.known[t]));
            prev = cur;
        }

        const auto fwd_first = propagate_pixels(init, s.flow_fwd, s.flow_bwd, s.amodal, 5.0, 32);
        const auto bwd_first =
            propagate_pixels(init, s.flow_fwd, s.flow_bwd, s.amodal, 5.0, 32, SweepOrder::backward_first);
        CHECK(fwd_first.known == bwd_first.known);

        const auto again = propagate_pixels(fwd_first, s.flow_fwd, s.flow_bwd, s.amodal, 5.0, 32);
        CHECK(again.frames == fwd_first.frames);
        CHECK(again.known == fwd_first.known);

        for (int t = 0; t < s.clip.length(); ++t) {
            CHECK(subset(fwd_first.filled_by_flow[t], s.amodal.masks[t]));
            for (int y = 0; y < s.clip.height(); ++y)
                for (int x = 0; x < s.clip.width(); ++x)
                    if (fwd_first.filled_by_flow[t].at(y, x))
                        for (int c = 0; c < 3; ++c)
                            CHECK(fwd_first.frames.frames[t].at(y, x, c) == s.gt_clip->frames[t].at(y, x, c));
        }
    }
}

TEST_CASE("propagation rejects mismatched flow lengths") {
    const ThreeFrame c = three_frame_case();
    FlowSequence short_fwd = c.fwd;
    short_fwd.flows.pop_back();
    CHECK_THROWS_AS(propagate_pixels(initial_state(c.corrupted, c.occluded), short_fwd, c.bwd, c.amodal), ShapeError);
}
