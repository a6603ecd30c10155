#pragma once

#include <vector>

#include "voin/core/types.hpp"
#include "voin/nn/tensor.hpp"

namespace voin::nn {

/// T×3×H×W, frames as the batch axis.
Tensor clip_tensor(const VideoClip& clip);
VideoClip tensor_clip(const Tensor& t);

/// T×1×H×W holding 0/1.
Tensor mask_tensor(const std::vector<Raster>& masks);
inline Tensor mask_tensor(const MaskSequence& masks) { return mask_tensor(masks.masks); }
/// Binarizes at `threshold` (values ≥ threshold map to 1).
MaskSequence tensor_masks(const Tensor& t, MaskKind kind, double threshold = 0.5);

/// N×2×H×W holding (u, v).
Tensor flow_tensor(const std::vector<FlowField>& flows);
inline Tensor flow_tensor(const FlowSequence& flows) { return flow_tensor(flows.flows); }
FlowSequence tensor_flows(const Tensor& t, FlowDirection direction);

}  // namespace voin::nn
