#pragma once

#include <cstdint>
#include <vector>

#include "voin/nn/layers.hpp"

namespace voin::adversary {

using nn::Tensor;
using nn::Var;

/// T×3×H×W clip to the 1×3×T×H×W layout of the 3D convolutions.
Var clip_volume(const Var& clip);

/// Conv3d whose weight is divided by its spectral norm. With `frozen` the
/// weight and bias enter the graph as constants.
class SnConv3d {
public:
    SnConv3d() = default;
    SnConv3d(nn::ParamStore& store, const std::string& name, int in, int out, std::array<int, 3> stride, Rng& rng);
    Var operator()(const Var& x, bool frozen = false) const;
    void power_iteration() { norm_.power_iteration(); }
    nn::Conv3d conv;

private:
    nn::SpectralNorm norm_;
};

/// Spatio-temporal attention: x + w_t ⊙ w_s ⊙ x on N×C×T×H×W features.
/// w_t (N×1×T×1×1) comes from spatial average pooling and a two-layer
/// projection; w_s (N×1×1×H×W) from channel/time mean and max pooling and a
/// 7×7 convolution. Both are squashed by a sigmoid.
class Stam {
public:
    Stam() = default;
    Stam(nn::ParamStore& store, const std::string& name, int channels, Rng& rng);
    Var temporal_weights(const Var& x, bool frozen = false) const;
    Var spatial_weights(const Var& x, bool frozen = false) const;
    Var operator()(const Var& x, bool frozen = false) const;

    nn::Linear squeeze;
    nn::Linear excite;
    nn::Conv2d spatial;
};

struct AdversaryConfig {
    int classes = 4;
    bool patch = true;       // T-PatchGAN discriminator
    bool multiclass = true;  // class discriminator
    bool attention = true;   // STAM inside the class discriminator
    std::vector<int> patch_widths{16, 32, 32};
    std::vector<int> class_widths{16, 32, 32, 32, 32, 32};

    /// Class discriminator off implies no attention.
    AdversaryConfig normalized() const;
    void validate() const;
};

/// Both discriminators with one parameter store. Disabled parts own no parameters.
class Adversary {
public:
    Adversary(const AdversaryConfig& config, std::uint64_t seed);

    /// Patch score map 1×1×T×H'×W'.
    Var patch_scores(const Var& clip, bool frozen = false) const;
    /// 1×(K+1) logits; index K is the fake class.
    Var class_logits(const Var& clip, bool frozen = false) const;
    /// Features after the fourth class-discriminator layer, before and after attention.
    std::pair<Var, Var> class_features(const Var& clip, bool frozen = false) const;

    /// One power-iteration step on every normalised weight.
    void power_iteration();

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const AdversaryConfig& config() const { return config_; }

private:
    AdversaryConfig config_;
    nn::ParamStore params_;
    std::vector<SnConv3d> patch_layers_;
    std::vector<SnConv3d> class_layers_;
    Stam stam_;
    nn::Linear head_;
    nn::SpectralNorm head_norm_;
};

/// −log softmax(logits)[label] for a 1×K logit row.
Var cross_entropy(const Var& logits, int label);

struct DiscriminatorLoss {
    Var hinge_real;  // mean ReLU(1 − D_p(real))
    Var hinge_fake;  // mean ReLU(1 + D_p(fake))
    Var class_real;  // CE(D_cls(real), y)
    Var class_fake;  // CE(D_cls(fake), K)
    Var total;
};

/// Disabled discriminators contribute zero terms. `fake` is detached here.
DiscriminatorLoss discriminator_loss(const Adversary& adv, const Var& real, const Var& fake, int label);

struct GeneratorAdversarialLoss {
    Var patch;  // −mean D_p(fake)
    Var cls;    // CE(D_cls(fake), y)
    Var total;
};

/// Discriminator weights are constants; gradients reach only `fake`.
GeneratorAdversarialLoss generator_adversarial_loss(const Adversary& adv, const Var& fake, int label);

}  // namespace voin::adversary
