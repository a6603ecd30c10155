#include "voin/flow/flow_loss.hpp"

#include "voin/core/error.hpp"

namespace voin::flow {

using namespace voin::nn;

namespace {

void require_non_negative(double v, const char* name) {
    if (v < 0) throw ParameterError(std::string(name) + " must be non-negative");
}

Var masked_mean(const Var& per_pixel, const Var& mask) {
    const double count = sum(mask).item();
    return sum(per_pixel * mask) * (1.0 / std::max(1.0, count));
}

}  // namespace

Var grad_x(const Var& f) {
    const std::int64_t W = f.dim(3);
    if (W == 1) return f * 0.0;
    const Var shifted = concat({slice(f, 3, 1, W - 1), slice(f, 3, W - 1, 1)}, 3);
    return shifted - f;
}

Var grad_y(const Var& f) {
    const std::int64_t H = f.dim(2);
    if (H == 1) return f * 0.0;
    const Var shifted = concat({slice(f, 2, 1, H - 1), slice(f, 2, H - 1, 1)}, 2);
    return shifted - f;
}

Var flow_gradient_loss(const Var& pred, const Var& gt, const Var& amodal, const Var& contour, double lambda3,
                       double lambda4) {
    require_non_negative(lambda3, "lambda3");
    require_non_negative(lambda4, "lambda4");
    if (pred.shape() != gt.shape()) throw ShapeError("flow_gradient_loss: shapes differ");
    const Var px = grad_x(pred), py = grad_y(pred);
    const Var match = sum(abs(grad_x(gt) - px) + abs(grad_y(gt) - py), {1}, true);
    const Var smooth = sum(abs(px) + abs(py), {1}, true);
    return masked_mean(lambda3 * match + lambda4 * (1.0 - contour) * smooth, amodal);
}

Var binomial_blur(const Var& x, int stride) {
    static const double k1[5] = {1, 4, 6, 4, 1};
    Tensor kernel({1, 1, 5, 5});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) kernel[i * 5 + j] = k1[i] * k1[j] / 256.0;
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const Var flat = reshape(x, {N * C, 1, H, W});
    const Var out = conv2d(pad_replicate2d(flat, 2), constant(kernel), Var(), stride, 0);
    return reshape(out, {N, C, out.dim(2), out.dim(3)});
}

Var laplacian_pyramid_loss(const Var& pred, const Var& gt, int levels) {
    if (pred.shape() != gt.shape()) throw ShapeError("laplacian_pyramid_loss: shapes differ");
    if (levels < 1) throw ParameterError("pyramid needs at least one level");
    const std::int64_t f = std::int64_t{1} << (levels - 1);
    if (pred.dim(2) % f != 0 || pred.dim(3) % f != 0) {
        throw ShapeError("pyramid: H and W must be divisible by " + std::to_string(f));
    }
    // The pyramid is linear, so the bands of the difference are the band differences.
    Var g = pred - gt;
    Var total;
    for (int j = 0; j < levels; ++j) {
        Var band = g;
        Var next;
        if (j + 1 < levels) {
            next = binomial_blur(g, 2);
            band = g - binomial_blur(upsample_nearest2d(next, 2));
        }
        const double pixels = static_cast<double>(band.dim(0) * band.dim(2) * band.dim(3));
        const Var term = sum(abs(band)) * (static_cast<double>(1 << j) / pixels);
        total = total.defined() ? total + term : term;
        g = next;
    }
    return total;
}

Var warp_loss(const Var& pred, const Var& frame, const Var& next_frame, const Var& amodal) {
    const Var warped = flow_warp(next_frame, pred);
    return masked_mean(sum(abs(frame - warped), {1}, true), amodal);
}

Var flow_l1_loss(const Var& pred, const Var& gt, const Var& amodal) {
    if (pred.shape() != gt.shape()) throw ShapeError("flow_l1_loss: shapes differ");
    const Var per_pixel = sum(abs(pred - gt), {1}, true) * (1.0 + amodal);
    return mean(per_pixel);
}

FlowLossParts flow_loss(const Var& pred, const Var& gt, const Var& frame, const Var& next_frame, const Var& amodal,
                        const Var& contour, const HyperParams& hp, bool structure_terms) {
    require_non_negative(hp.lambda2, "lambda2");
    FlowLossParts p;
    p.l1 = flow_l1_loss(pred, gt, amodal);
    p.laplacian = laplacian_pyramid_loss(pred, gt);
    p.total = p.l1 + hp.lambda2 * p.laplacian;
    if (structure_terms) {
        p.gradient = flow_gradient_loss(pred, gt, amodal, contour, hp.lambda3, hp.lambda4);
        p.warp = warp_loss(pred, frame, next_frame, amodal);
        p.total = p.total + p.gradient + p.warp;
    } else {
        p.gradient = constant(Tensor::scalar(0.0));
        p.warp = constant(Tensor::scalar(0.0));
    }
    return p;
}

}  // namespace voin::flow
