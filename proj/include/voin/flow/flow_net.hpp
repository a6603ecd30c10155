#pragma once

#include <cstdint>
#include <vector>

#include "voin/core/config.hpp"
#include "voin/core/types.hpp"
#include "voin/nn/layers.hpp"

namespace voin::flow {

using nn::Var;

/// Conditioning stack for a batch of frame pairs, all N×·×H×W.
struct FlowCondition {
    Var frame;       // X_t
    Var next_frame;  // X_{t+1} (the frame the flow points into)
    Var initial;     // corrupted flow, N×2
    Var visible;
    Var amodal;
    Var contour;
};

/// 1-px inner boundary: mask minus its 4-neighbour erosion (outside the frame counts as background).
Raster amodal_contour(const Raster& mask);
nn::Tensor contour_tensor(const nn::Tensor& masks);

/// O·(1 - occluded at the flow's source frame). Forward flow t sits on frame t,
/// backward flow t on frame t+1.
FlowSequence initial_flow(const FlowSequence& flows, const MaskSequence& occluded);

/// Stacks the forward pairs (t → t+1, masks of frame t) followed by the
/// backward pairs (t+1 → t, masks of frame t+1) into one batch of 2(T-1).
FlowCondition make_condition(const nn::Tensor& clip, const nn::Tensor& initial_fwd, const nn::Tensor& initial_bwd,
                             const nn::Tensor& visible, const nn::Tensor& amodal);

struct FlowNetConfig {
    bool amodal_guidance = true;  // amodal mask and contour as inputs
    std::vector<int> widths{16, 32, 32, 64, 64};

    int input_channels() const { return amodal_guidance ? 11 : 9; }
    int levels() const { return static_cast<int>(widths.size()) - 1; }
    void validate() const;
    FlatConfig to_meta() const;
    static FlowNetConfig from_meta(const FlatConfig& meta);
};

/// U-Net predicting a residual added to the initial flow inside the amodal mask.
class FlowNet {
public:
    FlowNet(const FlowNetConfig& config, std::uint64_t seed);

    /// Residual φ(x), N×2×H×W.
    Var residual(const FlowCondition& cond) const;
    /// Ō + M̂ ⊙ φ(x); equals Ō outside the amodal mask.
    Var forward(const FlowCondition& cond) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const FlowNetConfig& config() const { return config_; }

private:
    FlowNetConfig config_;
    nn::ParamStore params_;
    nn::Conv2d stem_;
    nn::Conv2d guide_;  // amodal mask and contour; absent without guidance
    std::vector<nn::Conv2d> down_;
    std::vector<nn::Conv2d> up_;
    nn::Conv2d head_;
};

}  // namespace voin::flow
