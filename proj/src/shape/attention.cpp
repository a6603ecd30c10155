#include "voin/shape/attention.hpp"

#include <cmath>

#include "voin/core/error.hpp"

namespace voin::shape {

using namespace voin::nn;

Var patch_embed(const Var& features, int r1, int r2) {
    if (features.shape().size() != 4) throw ShapeError("patch_embed expects T×C×H×W");
    const std::int64_t T = features.dim(0), C = features.dim(1), H = features.dim(2), W = features.dim(3);
    if (r1 <= 0 || r2 <= 0 || H % r1 != 0 || W % r2 != 0) {
        throw ShapeError("patch size " + std::to_string(r1) + "×" + std::to_string(r2) + " does not divide " +
                         std::to_string(H) + "×" + std::to_string(W));
    }
    const Var blocks = reshape(features, {T, C, H / r1, r1, W / r2, r2});
    return reshape(permute(blocks, {0, 2, 4, 1, 3, 5}), {T * (H / r1) * (W / r2), C * r1 * r2});
}

Var patch_unembed(const Var& patches, const Shape& shape, int r1, int r2) {
    const std::int64_t T = shape[0], C = shape[1], H = shape[2], W = shape[3];
    if (H % r1 != 0 || W % r2 != 0) throw ShapeError("patch_unembed: indivisible dimensions");
    const Var blocks = reshape(patches, {T, H / r1, W / r2, C, r1, r2});
    return reshape(permute(blocks, {0, 3, 1, 4, 2, 5}), {T, C, H, W});
}

Var attention_weights(const Var& q, const Var& k) {
    if (q.shape().size() != 2 || k.shape().size() != 2 || q.dim(1) != k.dim(1)) {
        throw ShapeError("attention expects N×d queries and keys of equal width");
    }
    if (!q.value().all_finite() || !k.value().all_finite()) throw NumericError("attention input is not finite");
    return softmax(matmul(q, k, false, true) * (1.0 / std::sqrt(static_cast<double>(q.dim(1)))));
}

Var scaled_dot_product_attention(const Var& q, const Var& k, const Var& v) {
    if (v.shape().size() != 2 || v.dim(0) != k.dim(0)) throw ShapeError("attention values must have one row per key");
    if (!v.value().all_finite()) throw NumericError("attention input is not finite");
    return matmul(attention_weights(q, k), v);
}

Tensor positional_encoding(std::int64_t T, std::int64_t C, std::int64_t H, std::int64_t W) {
    Tensor pe({T, C, H, W});
    const std::int64_t per_axis = std::max<std::int64_t>(1, C / 6);
    for (std::int64_t c = 0; c < C; ++c) {
        const std::int64_t axis = c % 3;
        const std::int64_t band = (c / 3) / 2;
        const bool use_cos = ((c / 3) % 2) == 1;
        const double freq = std::pow(0.5, static_cast<double>(band % per_axis)) * M_PI / 2.0;
        for (std::int64_t t = 0; t < T; ++t)
            for (std::int64_t y = 0; y < H; ++y)
                for (std::int64_t x = 0; x < W; ++x) {
                    const double pos = axis == 0 ? t : (axis == 1 ? y : x);
                    const double a = pos * freq;
                    pe[((t * C + c) * H + y) * W + x] = use_cos ? std::cos(a) : std::sin(a);
                }
    }
    return pe;
}

}  // namespace voin::shape
