#pragma once

#include <cstdint>
#include <vector>

#include "voin/core/config.hpp"
#include "voin/nn/layers.hpp"

namespace voin::shape {

using nn::Var;

struct ShapeNetConfig {
    int classes = 4;
    int channels = 32;              // transformer width at H/4 × W/4
    int layers = 8;
    std::vector<int> patch_scales{1, 2, 4, 8};  // one square scale per head
    int key_dim = 16;
    int embed_dim = 16;
    bool positional_encoding = true;
    bool semantic = true;           // class embedding branch

    int heads() const { return static_cast<int>(patch_scales.size()); }
    void validate() const;
    /// Frame sizes must be multiples of 4 · max(patch_scales).
    void validate_frame(int height, int width) const;
    FlatConfig to_meta() const;
    static ShapeNetConfig from_meta(const FlatConfig& meta);
};

/// Encoder → transformer layers → decoder → fusion with the class prior.
class ShapeNet {
public:
    ShapeNet(const ShapeNetConfig& config, std::uint64_t seed);

    /// clip T×3×H×W, visible T×1×H×W → amodal probabilities T×1×H×W.
    Var forward(const Var& clip, const Var& visible, int class_id) const;
    /// Pre-sigmoid scores of `forward`.
    Var logits(const Var& clip, const Var& visible, int class_id) const;

    /// Encoder features (with positional code when enabled), T×C×H/4×W/4.
    Var encode(const Var& clip, const Var& visible) const;
    /// Multi-head attention of one layer followed by the f_c merge, same shape as input.
    Var attention_block(int layer, const Var& features) const;
    Var transformer_layer(int layer, const Var& features) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const ShapeNetConfig& config() const { return config_; }

private:
    struct Head {
        nn::Linear q, k, v, out;
        int scale = 1;
    };
    struct Layer {
        std::vector<Head> heads;
        nn::ChannelNorm norm1, norm2;
        nn::Conv2d merge;
        nn::Conv2d ffn1;
        nn::Conv2d ffn2;
    };

    ShapeNetConfig config_;
    nn::ParamStore params_;
    nn::Conv2d enc1_, enc2_, enc3_;
    std::vector<Layer> layers_;
    nn::Conv2d dec1_, dec2_;
    Var embedding_;
    nn::Conv2d fuse1_, fuse2_;
};

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
Var bce_loss(const Var& pred, const Var& target);
/// Mean binary cross-entropy on logits; the gradient never vanishes on saturated outputs.
Var bce_with_logits(const Var& logits, const Var& target);
/// 1 - (2 Σ p·t + eps) / (Σ p + Σ t + eps).
Var dice_loss(const Var& pred, const Var& target, double eps = 1.0);
/// BCE against the amodal mask plus lambda1 · dice of pred·(1 - visible) against the occluded mask.
Var shape_loss(const Var& pred, const Var& amodal, const Var& occluded, const Var& visible, double lambda1);
/// shape_loss on pre-sigmoid scores, with the cross-entropy taken on the logits. Used for training.
Var shape_loss_logits(const Var& logits, const Var& amodal, const Var& occluded, const Var& visible, double lambda1);

}  // namespace voin::shape
