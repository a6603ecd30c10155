#pragma once

#include "voin/core/types.hpp"
#include "voin/nn/ops.hpp"

namespace voin::flow {

using nn::Var;

/// Forward differences along x and y with replicate padding (last column/row is zero).
Var grad_x(const Var& f);
Var grad_y(const Var& f);

/// Σ over amodal pixels of λ3·Σ|G(gt) - G(pred)| + λ4·(1 - contour)·Σ|G(pred)|, divided by |amodal|.
Var flow_gradient_loss(const Var& pred, const Var& gt, const Var& amodal, const Var& contour, double lambda3,
                       double lambda4);

/// 5×5 binomial blur with replicate padding, per channel.
Var binomial_blur(const Var& x, int stride = 1);
/// Σ_j 2^j · ‖Lap_j(pred) - Lap_j(gt)‖₁ / N_j, with N_j the pixel count of level j
/// and the L1 summed over channels.
Var laplacian_pyramid_loss(const Var& pred, const Var& gt, int levels = 3);

/// Σ over amodal pixels of Σ_c |X_t(p) - X_{t+1}(p + pred(p))|, divided by |amodal|.
Var warp_loss(const Var& pred, const Var& frame, const Var& next_frame, const Var& amodal);

/// Mean over pixels of (1 + amodal)·Σ_c |pred - gt|.
Var flow_l1_loss(const Var& pred, const Var& gt, const Var& amodal);

struct FlowLossParts {
    Var l1;
    Var laplacian;
    Var gradient;
    Var warp;
    Var total;
};

/// l1 + λ2·laplacian (+ gradient + warp when `structure_terms`).
FlowLossParts flow_loss(const Var& pred, const Var& gt, const Var& frame, const Var& next_frame, const Var& amodal,
                        const Var& contour, const HyperParams& hp, bool structure_terms = true);

}  // namespace voin::flow
