#include "voin/adversary/adversary.hpp"

#include "voin/core/error.hpp"

namespace voin::adversary {

using namespace voin::nn;

namespace {

constexpr double kSlope = 0.2;

Var maybe_detach(const Var& v, bool frozen) {
    if (!v.defined() || !frozen) return v;
    return v.detach();
}

Var frozen_weight(const SpectralNorm& norm) {
    NoGradGuard guard;
    return constant(norm.normalized().value());
}

Var zero_scalar() { return constant(Tensor::scalar(0.0)); }

}  // namespace

Var clip_volume(const Var& clip) {
    if (clip.value().rank() != 4 || clip.dim(1) != 3) throw ShapeError("discriminator expects a T×3×H×W clip");
    const Var v = permute(clip, {1, 0, 2, 3});
    return reshape(v, {1, 3, clip.dim(0), clip.dim(2), clip.dim(3)});
}

SnConv3d::SnConv3d(ParamStore& store, const std::string& name, int in, int out, std::array<int, 3> stride, Rng& rng)
    : conv(store, name, in, out, {3, 5, 5}, stride, {1, 2, 2}, rng), norm_(conv.weight, rng) {}

Var SnConv3d::operator()(const Var& x, bool frozen) const {
    if (frozen) return conv3d(x, frozen_weight(norm_), maybe_detach(conv.bias, true), conv.stride, conv.pad);
    return conv3d(x, norm_.normalized(), conv.bias, conv.stride, conv.pad);
}

Stam::Stam(ParamStore& store, const std::string& name, int channels, Rng& rng) {
    const int hidden = std::max(1, channels / 4);
    squeeze = Linear(store, name + ".squeeze", channels, hidden, rng);
    excite = Linear(store, name + ".excite", hidden, 1, rng);
    spatial = Conv2d(store, name + ".spatial", 2, 1, 7, 1, 3, rng);
}

Var Stam::temporal_weights(const Var& x, bool frozen) const {
    const std::int64_t N = x.dim(0), C = x.dim(1), T = x.dim(2);
    const Var pooled = permute(mean(x, {3, 4}), {0, 2, 1});  // N×T×C
    const Var flat = reshape(pooled, {N * T, C});
    const Var h = relu(matmul(flat, maybe_detach(squeeze.weight, frozen)) + maybe_detach(squeeze.bias, frozen));
    const Var s = matmul(h, maybe_detach(excite.weight, frozen)) + maybe_detach(excite.bias, frozen);
    return reshape(sigmoid(s), {N, 1, T, 1, 1});
}

Var Stam::spatial_weights(const Var& x, bool frozen) const {
    const std::int64_t N = x.dim(0), H = x.dim(3), W = x.dim(4);
    const Var avg = reshape(mean(x, {1, 2}), {N, 1, H, W});
    const Var mx = reshape(max(max(x, 1), 1), {N, 1, H, W});
    const Var s = conv2d(concat({avg, mx}, 1), maybe_detach(spatial.weight, frozen), maybe_detach(spatial.bias, frozen),
                         1, 3);
    return reshape(sigmoid(s), {N, 1, 1, H, W});
}

Var Stam::operator()(const Var& x, bool frozen) const {
    if (x.value().rank() != 5) throw ShapeError("attention expects N×C×T×H×W features");
    return x + temporal_weights(x, frozen) * spatial_weights(x, frozen) * x;
}

AdversaryConfig AdversaryConfig::normalized() const {
    AdversaryConfig c = *this;
    if (!c.multiclass) c.attention = false;
    return c;
}

void AdversaryConfig::validate() const {
    if (classes < 1) throw ParameterError("adversary needs at least one real class");
    if (patch_widths.empty()) throw ParameterError("patch discriminator needs at least one layer");
    if (class_widths.size() != 6) throw ParameterError("class discriminator has exactly six layers");
    for (int w : patch_widths)
        if (w <= 0) throw ParameterError("discriminator widths must be positive");
    for (int w : class_widths)
        if (w <= 0) throw ParameterError("discriminator widths must be positive");
}

Adversary::Adversary(const AdversaryConfig& config, std::uint64_t seed) : config_(config.normalized()) {
    config_.validate();
    Rng rng(seed);
    if (config_.patch) {
        int in = 3;
        for (std::size_t i = 0; i < config_.patch_widths.size(); ++i) {
            patch_layers_.emplace_back(params_, "patch" + std::to_string(i + 1), in, config_.patch_widths[i],
                                       std::array<int, 3>{1, 2, 2}, rng);
            in = config_.patch_widths[i];
        }
        patch_layers_.emplace_back(params_, "patch_out", in, 1, std::array<int, 3>{1, 1, 1}, rng);
    }
    if (config_.multiclass) {
        int in = 3;
        for (std::size_t i = 0; i < 6; ++i) {
            const std::array<int, 3> stride = i < 3 ? std::array<int, 3>{1, 2, 2} : std::array<int, 3>{1, 1, 1};
            class_layers_.emplace_back(params_, "class" + std::to_string(i + 1), in, config_.class_widths[i], stride,
                                       rng);
            in = config_.class_widths[i];
        }
        if (config_.attention) stam_ = Stam(params_, "stam", config_.class_widths[3], rng);
        head_ = Linear(params_, "class_head", in, config_.classes + 1, rng);
        head_norm_ = SpectralNorm(head_.weight, rng);
    }
}

Var Adversary::patch_scores(const Var& clip, bool frozen) const {
    if (!config_.patch) throw ConfigError("patch discriminator is disabled");
    Var x = clip_volume(clip);
    for (std::size_t i = 0; i < patch_layers_.size(); ++i) {
        x = patch_layers_[i](x, frozen);
        if (i + 1 < patch_layers_.size()) x = leaky_relu(x, kSlope);
    }
    return x;
}

std::pair<Var, Var> Adversary::class_features(const Var& clip, bool frozen) const {
    if (!config_.multiclass) throw ConfigError("class discriminator is disabled");
    Var x = clip_volume(clip);
    for (std::size_t i = 0; i < 4; ++i) x = leaky_relu(class_layers_[i](x, frozen), kSlope);
    const Var attended = config_.attention ? stam_(x, frozen) : x;
    return {x, attended};
}

Var Adversary::class_logits(const Var& clip, bool frozen) const {
    Var x = class_features(clip, frozen).second;
    for (std::size_t i = 4; i < 6; ++i) x = leaky_relu(class_layers_[i](x, frozen), kSlope);
    const Var pooled = mean(x, {2, 3, 4});  // 1×C
    if (frozen) return matmul(pooled, frozen_weight(head_norm_)) + head_.bias.detach();
    return matmul(pooled, head_norm_.normalized()) + head_.bias;
}

void Adversary::power_iteration() {
    for (auto& l : patch_layers_) l.power_iteration();
    for (auto& l : class_layers_) l.power_iteration();
    if (config_.multiclass) head_norm_.power_iteration();
}

Var cross_entropy(const Var& logits, int label) {
    if (logits.value().rank() != 2 || logits.dim(0) != 1) throw ShapeError("cross_entropy expects 1×K logits");
    if (label < 0 || label >= logits.dim(1)) {
        throw ParameterError("class label " + std::to_string(label) + " outside [0, " + std::to_string(logits.dim(1)) +
                             ")");
    }
    return reshape(-slice(log_softmax(logits), 1, label, 1), {});
}

DiscriminatorLoss discriminator_loss(const Adversary& adv, const Var& real, const Var& fake_in, int label) {
    const AdversaryConfig& cfg = adv.config();
    if (label < 0 || label >= cfg.classes) {
        throw ParameterError("class label " + std::to_string(label) + " outside [0, " + std::to_string(cfg.classes) + ")");
    }
    const Var fake = fake_in.detach();
    DiscriminatorLoss out;
    out.hinge_real = out.hinge_fake = out.class_real = out.class_fake = zero_scalar();
    if (cfg.patch) {
        out.hinge_real = mean(relu(1.0 - adv.patch_scores(real)));
        out.hinge_fake = mean(relu(1.0 + adv.patch_scores(fake)));
    }
    if (cfg.multiclass) {
        out.class_real = cross_entropy(adv.class_logits(real), label);
        out.class_fake = cross_entropy(adv.class_logits(fake), cfg.classes);
    }
    out.total = out.hinge_real + out.hinge_fake + out.class_real + out.class_fake;
    return out;
}

GeneratorAdversarialLoss generator_adversarial_loss(const Adversary& adv, const Var& fake, int label) {
    const AdversaryConfig& cfg = adv.config();
    if (label < 0 || label >= cfg.classes) {
        throw ParameterError("class label " + std::to_string(label) + " outside [0, " + std::to_string(cfg.classes) + ")");
    }
    GeneratorAdversarialLoss out;
    out.patch = cfg.patch ? -mean(adv.patch_scores(fake, true)) : zero_scalar();
    out.cls = cfg.multiclass ? cross_entropy(adv.class_logits(fake, true), label) : zero_scalar();
    out.total = out.patch + out.cls;
    return out;
}

}  // namespace voin::adversary
