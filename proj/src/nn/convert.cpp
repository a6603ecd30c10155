#include "voin/nn/convert.hpp"

#include "voin/core/error.hpp"

namespace voin::nn {

Tensor clip_tensor(const VideoClip& clip) {
    const std::int64_t T = clip.length(), H = clip.height(), W = clip.width();
    Tensor out({T, 3, H, W});
    for (std::int64_t t = 0; t < T; ++t) {
        const Image& f = clip.frames[static_cast<std::size_t>(t)];
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) out[((t * 3 + c) * H + y) * W + x] = f.at(y, x, c);
    }
    return out;
}

VideoClip tensor_clip(const Tensor& t) {
    if (t.rank() != 4 || t.dim(1) != 3) throw ShapeError("tensor_clip expects T×3×H×W, got " + shape_str(t.shape()));
    const std::int64_t T = t.dim(0), H = t.dim(2), W = t.dim(3);
    VideoClip clip;
    for (std::int64_t i = 0; i < T; ++i) {
        Image f(static_cast<int>(H), static_cast<int>(W));
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) f.at(y, x, c) = static_cast<float>(t[((i * 3 + c) * H + y) * W + x]);
        clip.frames.push_back(std::move(f));
    }
    return clip;
}

Tensor mask_tensor(const std::vector<Raster>& masks) {
    if (masks.empty()) throw ShapeError("mask_tensor of an empty sequence");
    const std::int64_t T = static_cast<std::int64_t>(masks.size()), H = masks[0].height, W = masks[0].width;
    Tensor out({T, 1, H, W});
    for (std::int64_t t = 0; t < T; ++t) {
        const Raster& m = masks[static_cast<std::size_t>(t)];
        if (m.height != H || m.width != W) throw ShapeError("mask_tensor: dimensions differ across frames");
        for (std::int64_t i = 0; i < H * W; ++i) out[t * H * W + i] = m.data[static_cast<std::size_t>(i)];
    }
    return out;
}

MaskSequence tensor_masks(const Tensor& t, MaskKind kind, double threshold) {
    if (t.rank() != 4 || t.dim(1) != 1) throw ShapeError("tensor_masks expects T×1×H×W, got " + shape_str(t.shape()));
    const std::int64_t T = t.dim(0), H = t.dim(2), W = t.dim(3);
    MaskSequence seq{{}, kind};
    for (std::int64_t i = 0; i < T; ++i) {
        Raster r(static_cast<int>(H), static_cast<int>(W));
        for (std::int64_t p = 0; p < H * W; ++p) r.data[static_cast<std::size_t>(p)] = t[i * H * W + p] >= threshold;
        seq.masks.push_back(std::move(r));
    }
    return seq;
}

Tensor flow_tensor(const std::vector<FlowField>& flows) {
    if (flows.empty()) throw ShapeError("flow_tensor of an empty sequence");
    const std::int64_t N = static_cast<std::int64_t>(flows.size()), H = flows[0].height, W = flows[0].width;
    Tensor out({N, 2, H, W});
    for (std::int64_t n = 0; n < N; ++n) {
        const FlowField& f = flows[static_cast<std::size_t>(n)];
        if (f.height != H || f.width != W) throw ShapeError("flow_tensor: dimensions differ across pairs");
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                out[((n * 2 + 0) * H + y) * W + x] = f.u(y, x);
                out[((n * 2 + 1) * H + y) * W + x] = f.v(y, x);
            }
    }
    return out;
}

FlowSequence tensor_flows(const Tensor& t, FlowDirection direction) {
    if (t.rank() != 4 || t.dim(1) != 2) throw ShapeError("tensor_flows expects N×2×H×W, got " + shape_str(t.shape()));
    const std::int64_t N = t.dim(0), H = t.dim(2), W = t.dim(3);
    FlowSequence seq{{}, direction};
    for (std::int64_t n = 0; n < N; ++n) {
        FlowField f(static_cast<int>(H), static_cast<int>(W));
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                f.u(y, x) = static_cast<float>(t[((n * 2 + 0) * H + y) * W + x]);
                f.v(y, x) = static_cast<float>(t[((n * 2 + 1) * H + y) * W + x]);
            }
        seq.flows.push_back(std::move(f));
    }
    return seq;
}

}  // namespace voin::nn
