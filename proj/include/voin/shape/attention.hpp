#pragma once

#include "voin/nn/ops.hpp"

namespace voin::shape {

using nn::Var;

/// T×C×H×W → (T·H/r1·W/r2) × (C·r1·r2). Patches are frame-major, then
/// row-major; each vector is flattened channel-major.
Var patch_embed(const Var& features, int r1, int r2);
/// Inverse of patch_embed for the given T×C×H×W shape.
Var patch_unembed(const Var& patches, const nn::Shape& shape, int r1, int r2);

/// softmax(Q Kᵀ / √d_k) V over N×d_k queries/keys and N×d_v values.
Var scaled_dot_product_attention(const Var& q, const Var& k, const Var& v);
/// Attention weights alone (N×N), rows summing to one.
Var attention_weights(const Var& q, const Var& k);

/// Fixed sinusoidal code over (t, y, x): T×C×H×W.
nn::Tensor positional_encoding(std::int64_t T, std::int64_t C, std::int64_t H, std::int64_t W);

}  // namespace voin::shape
