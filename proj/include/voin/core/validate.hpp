#pragma once

#include "voin/core/sample.hpp"
#include "voin/core/types.hpp"

namespace voin {

/// Throws ValidationError describing the first violated invariant: clip
/// shape and range, mask binarity, visible ⊆ amodal, occluded == amodal ∧ ¬visible,
/// flow lengths (T−1), flow dimensions, flow finiteness.
void validate_sample(const VideoClip& clip, const MaskSequence& visible, const MaskSequence& amodal,
                     const MaskSequence& occluded, const FlowSequence& flow_fwd,
                     const FlowSequence& flow_bwd);

void validate_sample(const Sample& sample);

void validate_clip(const VideoClip& clip);

}  // namespace voin
