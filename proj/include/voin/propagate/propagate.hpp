#pragma once

#include "voin/core/types.hpp"

namespace voin::propagate {

struct Warped {
    Image image;
    Raster valid;
};

/// Samples `image` at p + flow(p) bilinearly. valid(p) holds when every
/// neighbour with nonzero weight is in bounds and valid in `valid`.
Warped warp_bilinear(const Image& image, const FlowField& flow, const Raster& valid);

/// valid(p) iff ‖fwd(p) + bwd(p + fwd(p))‖₂ < tau, with bwd sampled bilinearly
/// and lookups outside the frame clamped to the border.
Raster cycle_consistency_mask(const FlowField& fwd, const FlowField& bwd, double tau);

struct PropagationState {
    VideoClip frames;
    std::vector<Raster> known;           // never shrinks
    std::vector<Raster> filled_by_flow;  // subset of the amodal mask
    int sweeps = 0;
};

/// Known = everything except the occluded pixels.
PropagationState initial_state(const VideoClip& clip, const MaskSequence& occluded);

enum class SweepOrder { forward_first, backward_first };

/// Repeats sweeps of two passes (fill t from t-1, then t from t+1) until a
/// sweep changes nothing or max_sweeps is reached. Each pass reads a snapshot
/// of the previous state. An unknown amodal pixel is filled when its flow
/// target is cycle-consistent and all of its nonzero-weight neighbours are
/// known and inside the source frame's amodal mask.
PropagationState propagate_pixels(PropagationState state, const FlowSequence& fwd, const FlowSequence& bwd,
                                  const MaskSequence& amodal, double tau = 5.0, int max_sweeps = 8,
                                  SweepOrder order = SweepOrder::forward_first);

/// amodal AND NOT known.
MaskSequence remaining_hole_mask(const PropagationState& state, const MaskSequence& amodal);

}  // namespace voin::propagate
