#pragma once

#include "voin/core/types.hpp"
#include "voin/nn/ops.hpp"

namespace voin::train {

using nn::Var;

/// (Σ M·|Y - gt| + λ5·Σ (1 - M)·|Y - gt|) / numel, M broadcast over channels.
Var content_loss(const Var& y, const Var& gt, const Var& mask, double lambda5);

struct AppearanceParts {
    Var discriminator;
    Var generator;
    Var content;
};
/// discriminator + generator + λ6·content.
Var appearance_loss(const AppearanceParts& parts, double lambda6);

struct TotalParts {
    Var shape;
    Var flow;
    Var appearance;
};
/// shape + λ_flow·flow + λ_app·appearance.
Var total_loss(const TotalParts& parts, const HyperParams& hp);

}  // namespace voin::train
