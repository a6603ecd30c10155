#include "voin/train/losses.hpp"

#include "voin/core/error.hpp"

namespace voin::train {

using namespace voin::nn;

Var content_loss(const Var& y, const Var& gt, const Var& mask, double lambda5) {
    if (lambda5 < 0) throw ParameterError("lambda5 must be non-negative");
    if (y.shape() != gt.shape()) throw ShapeError("content_loss: shapes differ");
    const Var d = abs(y - gt);
    const Var weight = mask + lambda5 * (1.0 - mask);
    return sum(d * weight) * (1.0 / static_cast<double>(y.numel()));
}

Var appearance_loss(const AppearanceParts& parts, double lambda6) {
    if (lambda6 < 0) throw ParameterError("lambda6 must be non-negative");
    return parts.discriminator + parts.generator + lambda6 * parts.content;
}

Var total_loss(const TotalParts& parts, const HyperParams& hp) {
    if (hp.lambda_flow < 0 || hp.lambda_app < 0) throw ParameterError("loss weights must be non-negative");
    return parts.shape + hp.lambda_flow * parts.flow + hp.lambda_app * parts.appearance;
}

}  // namespace voin::train
