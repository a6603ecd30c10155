#include "voin/train/pipeline.hpp"

#include "voin/core/error.hpp"
#include "voin/nn/convert.hpp"
#include "voin/propagate/propagate.hpp"

namespace voin::train {

Tensor corrupted_flow(const Tensor& flows, const Tensor& occluded, FlowDirection direction) {
    const std::int64_t N = flows.dim(0), HW = flows.dim(2) * flows.dim(3);
    if (occluded.dim(0) != N + 1 || occluded.dim(2) * occluded.dim(3) != HW) {
        throw ShapeError("corrupted_flow: need T masks for T-1 flows of the same size");
    }
    const std::int64_t offset = direction == FlowDirection::forward ? 0 : 1;
    Tensor out = flows;
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t i = 0; i < HW; ++i) {
            if (occluded[(n + offset) * HW + i] < 0.5) continue;
            out[(n * 2) * HW + i] = 0.0;
            out[(n * 2 + 1) * HW + i] = 0.0;
        }
    return out;
}

std::pair<FlowSequence, FlowSequence> split_flows(const Tensor& batch) {
    const std::int64_t N = batch.dim(0);
    if (N % 2 != 0) throw ShapeError("split_flows: batch must hold forward and backward halves");
    const std::int64_t per = batch.numel() / N;
    nn::Shape half{N / 2, batch.dim(1), batch.dim(2), batch.dim(3)};
    Tensor fwd(half), bwd(half);
    std::copy_n(batch.data(), per * (N / 2), fwd.data());
    std::copy_n(batch.data() + per * (N / 2), per * (N / 2), bwd.data());
    return {nn::tensor_flows(fwd, FlowDirection::forward), nn::tensor_flows(bwd, FlowDirection::backward)};
}

Propagated propagate_clip(const VideoClip& clip, const MaskSequence& occluded, const FlowSequence& fwd,
                          const FlowSequence& bwd, const MaskSequence& amodal, double tau, int max_sweeps) {
    auto state = propagate::initial_state(clip, occluded);
    state = propagate::propagate_pixels(std::move(state), fwd, bwd, amodal, tau, max_sweeps);
    Propagated out;
    out.frames = std::move(state.frames);
    out.hole = propagate::remaining_hole_mask(state, amodal);
    for (const auto& r : state.filled_by_flow) out.filled += r.count();
    return out;
}

MaskSequence mask_difference(const MaskSequence& a, const MaskSequence& b, MaskKind kind) {
    if (a.length() != b.length()) throw ShapeError("mask_difference: lengths differ");
    MaskSequence out{a.masks, kind};
    for (int t = 0; t < a.length(); ++t)
        for (std::size_t i = 0; i < out.masks[t].data.size(); ++i) out.masks[t].data[i] = a.masks[t].data[i] && !b.masks[t].data[i];
    return out;
}

MaskSequence mask_union(const MaskSequence& a, const MaskSequence& b, MaskKind kind) {
    if (a.length() != b.length()) throw ShapeError("mask_union: lengths differ");
    MaskSequence out{a.masks, kind};
    for (int t = 0; t < a.length(); ++t)
        for (std::size_t i = 0; i < out.masks[t].data.size(); ++i) out.masks[t].data[i] = a.masks[t].data[i] || b.masks[t].data[i];
    return out;
}

}  // namespace voin::train
