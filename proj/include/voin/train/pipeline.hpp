#pragma once

#include "voin/core/types.hpp"
#include "voin/nn/tensor.hpp"

namespace voin::train {

using nn::Tensor;

/// Ground-truth flows with the occluded region zeroed, N×2×H×W. Forward flow
/// t uses mask t, backward flow t uses mask t+1.
Tensor corrupted_flow(const Tensor& flows, const Tensor& occluded, FlowDirection direction);

/// First T-1 entries are forward flows, the rest backward.
std::pair<FlowSequence, FlowSequence> split_flows(const Tensor& batch);

struct Propagated {
    VideoClip frames;
    MaskSequence hole{{}, MaskKind::hole};
    std::size_t filled = 0;  // pixels written by propagation
};

/// Flow-guided filling of `occluded` inside `amodal`.
Propagated propagate_clip(const VideoClip& clip, const MaskSequence& occluded, const FlowSequence& fwd,
                          const FlowSequence& bwd, const MaskSequence& amodal, double tau, int max_sweeps);

/// a AND NOT b per frame.
MaskSequence mask_difference(const MaskSequence& a, const MaskSequence& b, MaskKind kind);
/// a OR b per frame.
MaskSequence mask_union(const MaskSequence& a, const MaskSequence& b, MaskKind kind);

}  // namespace voin::train
