#pragma once

#include <cstdint>
#include <vector>

#include "voin/core/config.hpp"
#include "voin/nn/layers.hpp"

namespace voin::generator {

using nn::Tensor;
using nn::Var;

/// Channel slice per temporal offset: max(1, C / (2n + 1)).
std::int64_t shift_slice(std::int64_t channels, int field);

/// x: T×C×H×W. For j in [1, n], slice j (channels [(j-1)s, js)) reads frame t-j
/// and slice n+j reads frame t+j; out-of-clip frames read zeros. Remaining
/// channels pass through. Requires C ≥ 2ns.
Var temporal_shift(const Var& x, int field);

/// Nearest-neighbour decimation of N×C×H×W by an integer factor (H, W must divide).
Tensor downsample_nearest(const Tensor& x, int factor);

/// One gated convolution: σ(W_g * x + f̄(masks)) ⊙ act(W_f * shift(x)).
/// The mask fusion f̄ is a 3×3 conv over (occluded, amodal) at the block's
/// input resolution, with the block's stride.
class GatedTsmBlock {
public:
    GatedTsmBlock() = default;
    GatedTsmBlock(nn::ParamStore& store, const std::string& name, int in, int out, int stride, int field,
                  bool occlusion_gate, bool rectify, Rng& rng);

    /// Gate pre-activation. `masks` is T×2×H0×W0 at any multiple of x's resolution.
    Var gate(const Var& x, const Tensor& masks) const;
    Var features(const Var& x) const;
    Var operator()(const Var& x, const Tensor& masks) const;

    bool has_occlusion_gate() const { return occlusion_gate_; }
    nn::Conv2d feature_conv;
    nn::Conv2d gate_conv;
    nn::Conv2d mask_conv;  // undefined weight when the occlusion gate is off

private:
    int field_ = 2;
    bool occlusion_gate_ = true;
    bool rectify_ = true;
};

struct GeneratorConfig {
    std::vector<int> widths{32, 64};  // first block; all deeper blocks
    int temporal_field = 2;
    bool occlusion_gate = true;

    void validate() const;
    FlatConfig to_meta() const;
    static GeneratorConfig from_meta(const FlatConfig& meta);
};

/// Encoder-decoder of gated TSM blocks with two stride-2 stages and additive skips.
class Generator {
public:
    Generator(const GeneratorConfig& config, std::uint64_t seed);

    /// frames: T×3×H×W (hole pixels are zeroed internally); hole, amodal, occluded: T×1×H×W.
    /// Returns T×3×H×W in (0, 1). H and W must be multiples of 4.
    Var forward(const Var& frames, const Tensor& hole, const Tensor& amodal, const Tensor& occluded) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const GeneratorConfig& config() const { return config_; }

private:
    GeneratorConfig config_;
    nn::ParamStore params_;
    GatedTsmBlock e1_, e2_, e3_, mid_, d1_, d2_, head_;
};

/// hole ⊙ generated + (1 - hole) ⊙ propagated.
Var composite(const Var& generated, const Var& propagated, const Tensor& hole);

}  // namespace voin::generator
