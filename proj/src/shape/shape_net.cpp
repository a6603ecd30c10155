#include "voin/shape/shape_net.hpp"

#include <cmath>
#include <sstream>

#include "voin/core/error.hpp"
#include "voin/shape/attention.hpp"

namespace voin::shape {

using namespace voin::nn;

namespace {

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("bad integer list: " + s);
        }
    }
    return out;
}

void scale_weight(Conv2d& c, double factor) {
    for (double& v : c.weight.mutable_value().values()) v *= factor;
}

}  // namespace

void ShapeNetConfig::validate() const {
    if (classes < 1) throw ParameterError("shape net needs at least one class");
    if (layers < 0) throw ParameterError("layer count must be non-negative");
    if (patch_scales.empty()) throw ParameterError("shape net needs at least one head");
    if (channels % heads() != 0) throw ParameterError("channels must split evenly across heads");
    for (int s : patch_scales) {
        if (s <= 0) throw ParameterError("patch scales must be positive");
    }
    if (key_dim <= 0 || embed_dim <= 0 || channels <= 0) throw ParameterError("dimensions must be positive");
}

void ShapeNetConfig::validate_frame(int height, int width) const {
    int largest = 1;
    for (int s : patch_scales) largest = std::max(largest, s);
    if (height % (4 * largest) != 0 || width % (4 * largest) != 0) {
        throw ShapeError("frame " + std::to_string(height) + "×" + std::to_string(width) +
                         " is not a multiple of 4 × largest patch scale " + std::to_string(largest));
    }
}

FlatConfig ShapeNetConfig::to_meta() const {
    FlatConfig m;
    m.set("model", "shape");
    m.set("classes", std::to_string(classes));
    m.set("channels", std::to_string(channels));
    m.set("layers", std::to_string(layers));
    m.set("patch_scales", join(patch_scales));
    m.set("key_dim", std::to_string(key_dim));
    m.set("embed_dim", std::to_string(embed_dim));
    m.set("positional_encoding", positional_encoding ? "1" : "0");
    m.set("semantic", semantic ? "1" : "0");
    return m;
}

ShapeNetConfig ShapeNetConfig::from_meta(const FlatConfig& meta) {
    if (meta.get_string("model", "") != "shape") throw ConfigError("checkpoint is not a shape model");
    ShapeNetConfig c;
    c.classes = static_cast<int>(meta.get_int("classes", c.classes));
    c.channels = static_cast<int>(meta.get_int("channels", c.channels));
    c.layers = static_cast<int>(meta.get_int("layers", c.layers));
    c.patch_scales = split_ints(meta.get_string("patch_scales", join(c.patch_scales)));
    c.key_dim = static_cast<int>(meta.get_int("key_dim", c.key_dim));
    c.embed_dim = static_cast<int>(meta.get_int("embed_dim", c.embed_dim));
    c.positional_encoding = meta.get_bool("positional_encoding", c.positional_encoding);
    c.semantic = meta.get_bool("semantic", c.semantic);
    return c;
}

ShapeNet::ShapeNet(const ShapeNetConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const int C = config_.channels;
    enc1_ = Conv2d(params_, "enc1", 4, 16, 3, 1, 1, rng);
    enc2_ = Conv2d(params_, "enc2", 16, 32, 3, 2, 1, rng);
    enc3_ = Conv2d(params_, "enc3", 32, C, 3, 2, 1, rng);
    const int per_head = C / config_.heads();
    for (int l = 0; l < config_.layers; ++l) {
        Layer layer;
        const std::string p = "layer" + std::to_string(l);
        for (int h = 0; h < config_.heads(); ++h) {
            const int r = config_.patch_scales[static_cast<std::size_t>(h)];
            const int dim = per_head * r * r;
            const std::string hp = p + ".head" + std::to_string(h);
            Head head;
            head.scale = r;
            head.q = Linear(params_, hp + ".q", dim, config_.key_dim, rng);
            head.k = Linear(params_, hp + ".k", dim, config_.key_dim, rng);
            head.v = Linear(params_, hp + ".v", dim, config_.key_dim, rng);
            head.out = Linear(params_, hp + ".out", config_.key_dim, dim, rng);
            layer.heads.push_back(head);
        }
        layer.norm1 = ChannelNorm(params_, p + ".norm1", C);
        layer.norm2 = ChannelNorm(params_, p + ".norm2", C);
        layer.merge = Conv2d(params_, p + ".merge", C, C, 3, 1, 1, rng);
        layer.ffn1 = Conv2d(params_, p + ".ffn1", C, C, 3, 1, 1, rng);
        layer.ffn2 = Conv2d(params_, p + ".ffn2", C, C, 3, 1, 1, rng);
        // Residual branches start small so the stack is near identity.
        scale_weight(layer.merge, 0.1);
        scale_weight(layer.ffn2, 0.1);
        layers_.push_back(layer);
    }
    dec1_ = Conv2d(params_, "dec1", C, 32, 3, 1, 1, rng);
    dec2_ = Conv2d(params_, "dec2", 32, 16, 3, 1, 1, rng);
    int fuse_in = 16 + 1;
    if (config_.semantic) {
        Tensor table({config_.classes, config_.embed_dim});
        for (double& v : table.values()) v = rng.uniform(-1.0, 1.0);
        embedding_ = params_.add("embedding", table);
        fuse_in += config_.embed_dim;
    }
    fuse1_ = Conv2d(params_, "fuse1", fuse_in, 16, 3, 1, 1, rng);
    fuse2_ = Conv2d(params_, "fuse2", 16, 1, 3, 1, 1, rng);
}

Var ShapeNet::encode(const Var& clip, const Var& visible) const {
    if (clip.shape().size() != 4 || clip.dim(1) != 3) throw ShapeError("shape net expects a T×3×H×W clip");
    if (visible.shape() != Shape{clip.dim(0), 1, clip.dim(2), clip.dim(3)}) {
        throw ShapeError("visible mask shape " + shape_str(visible.shape()) + " does not match the clip");
    }
    config_.validate_frame(static_cast<int>(clip.dim(2)), static_cast<int>(clip.dim(3)));
    Var x = concat({clip, visible}, 1);
    x = leaky_relu(enc1_(x));
    x = leaky_relu(enc2_(x));
    x = leaky_relu(enc3_(x));
    if (config_.positional_encoding) {
        x = x + constant(positional_encoding(x.dim(0), x.dim(1), x.dim(2), x.dim(3)));
    }
    return x;
}

Var ShapeNet::attention_block(int layer, const Var& features) const {
    const Layer& L = layers_.at(static_cast<std::size_t>(layer));
    const std::int64_t per_head = features.dim(1) / config_.heads();
    std::vector<Var> outs;
    for (std::size_t h = 0; h < L.heads.size(); ++h) {
        const Head& head = L.heads[h];
        const Var part = slice(features, 1, static_cast<std::int64_t>(h) * per_head, per_head);
        const Var tokens = patch_embed(part, head.scale, head.scale);
        const Var att = scaled_dot_product_attention(head.q(tokens), head.k(tokens), head.v(tokens));
        outs.push_back(patch_unembed(head.out(att), part.shape(), head.scale, head.scale));
    }
    return L.merge(outs.size() == 1 ? outs[0] : concat(outs, 1));
}

Var ShapeNet::transformer_layer(int layer, const Var& features) const {
    const Layer& L = layers_.at(static_cast<std::size_t>(layer));
    // Pre-norm residual branches.
    Var x = features + attention_block(layer, L.norm1(features));
    return x + L.ffn2(leaky_relu(L.ffn1(L.norm2(x))));
}

Var ShapeNet::forward(const Var& clip, const Var& visible, int class_id) const {
    return sigmoid(logits(clip, visible, class_id));
}

Var ShapeNet::logits(const Var& clip, const Var& visible, int class_id) const {
    if (class_id < 0 || class_id >= config_.classes) {
        throw ParameterError("class id " + std::to_string(class_id) + " outside [0, " +
                             std::to_string(config_.classes) + ")");
    }
    Var x = encode(clip, visible);
    for (int l = 0; l < config_.layers; ++l) x = transformer_layer(l, x);
    x = leaky_relu(dec1_(upsample_nearest2d(x, 2)));
    x = leaky_relu(dec2_(upsample_nearest2d(x, 2)));
    std::vector<Var> parts{x, visible};
    if (config_.semantic) {
        Tensor onehot({1, config_.classes}, 0.0);
        onehot[class_id] = 1.0;
        const Var code = reshape(matmul(constant(onehot), embedding_), {1, config_.embed_dim, 1, 1});
        parts.push_back(code * visible);
    }
    x = concat(parts, 1);
    return fuse2_(leaky_relu(fuse1_(x)));
}

Var bce_loss(const Var& pred, const Var& target) {
    if (pred.shape() != target.shape()) throw ShapeError("bce: prediction and target shapes differ");
    const Var p = clamp(pred, 1e-7, 1.0 - 1e-7);
    return -mean(target * log(p) + (1.0 - target) * log(1.0 - p));
}

Var bce_with_logits(const Var& logits, const Var& target) {
    if (logits.shape() != target.shape()) throw ShapeError("bce: logit and target shapes differ");
    return mean(softplus(logits) - target * logits);
}

Var dice_loss(const Var& pred, const Var& target, double eps) {
    if (pred.shape() != target.shape()) throw ShapeError("dice: prediction and target shapes differ");
    const Var inter = sum(pred * target);
    return 1.0 - (2.0 * inter + eps) / (sum(pred) + sum(target) + eps);
}

Var shape_loss(const Var& pred, const Var& amodal, const Var& occluded, const Var& visible, double lambda1) {
    if (lambda1 < 0) throw ParameterError("lambda1 must be non-negative");
    Var loss = bce_loss(pred, amodal);
    if (lambda1 > 0) loss = loss + lambda1 * dice_loss(pred * (1.0 - visible), occluded);
    return loss;
}

Var shape_loss_logits(const Var& logits, const Var& amodal, const Var& occluded, const Var& visible, double lambda1) {
    if (lambda1 < 0) throw ParameterError("lambda1 must be non-negative");
    Var loss = bce_with_logits(logits, amodal);
    if (lambda1 > 0) loss = loss + lambda1 * dice_loss(sigmoid(logits) * (1.0 - visible), occluded);
    return loss;
}

}  // namespace voin::shape
