#include "voin/generator/generator.hpp"

#include <sstream>

#include "voin/core/error.hpp"

namespace voin::generator {

using namespace voin::nn;

std::int64_t shift_slice(std::int64_t channels, int field) {
    return std::max<std::int64_t>(1, channels / (2 * field + 1));
}

Var temporal_shift(const Var& x, int field) {
    if (x.value().rank() != 4) throw ShapeError("temporal_shift expects T×C×H×W");
    if (field < 0) throw ParameterError("temporal field must be non-negative");
    if (field == 0) return x;
    const std::int64_t T = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    const std::int64_t s = shift_slice(C, field);
    if (C < 2 * field * s) {
        throw ShapeError("temporal_shift: " + std::to_string(C) + " channels too few for field " + std::to_string(field));
    }
    // offset[c] = source frame minus target frame.
    std::vector<std::int64_t> offset(static_cast<std::size_t>(C), 0);
    for (int j = 1; j <= field; ++j) {
        for (std::int64_t c = (j - 1) * s; c < j * s; ++c) offset[static_cast<std::size_t>(c)] = -j;
        for (std::int64_t c = (field + j - 1) * s; c < (field + j) * s; ++c) offset[static_cast<std::size_t>(c)] = j;
    }
    Tensor out(x.shape());
    const double* src = x.value().data();
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t c = 0; c < C; ++c) {
            const std::int64_t from = t + offset[static_cast<std::size_t>(c)];
            if (from < 0 || from >= T) continue;
            std::copy_n(src + (from * C + c) * HW, HW, out.data() + (t * C + c) * HW);
        }
    return make_result(std::move(out), {x}, [offset, T, C, HW](Node& self) {
        double* g = self.parents[0]->grad_buffer().data();
        for (std::int64_t t = 0; t < T; ++t)
            for (std::int64_t c = 0; c < C; ++c) {
                const std::int64_t from = t + offset[static_cast<std::size_t>(c)];
                if (from < 0 || from >= T) continue;
                const double* go = self.grad.data() + (t * C + c) * HW;
                double* gi = g + (from * C + c) * HW;
                for (std::int64_t i = 0; i < HW; ++i) gi[i] += go[i];
            }
    });
}

Tensor downsample_nearest(const Tensor& x, int factor) {
    if (x.rank() != 4) throw ShapeError("downsample_nearest expects N×C×H×W");
    const std::int64_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
    if (factor < 1 || H % factor != 0 || W % factor != 0) {
        throw ShapeError("mask resolution " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by " +
                         std::to_string(factor));
    }
    if (factor == 1) return x;
    const std::int64_t Ho = H / factor, Wo = W / factor;
    Tensor out({x.dim(0), x.dim(1), Ho, Wo});
    for (std::int64_t p = 0; p < NC; ++p)
        for (std::int64_t y = 0; y < Ho; ++y)
            for (std::int64_t xx = 0; xx < Wo; ++xx) out[(p * Ho + y) * Wo + xx] = x[(p * H + y * factor) * W + xx * factor];
    return out;
}

GatedTsmBlock::GatedTsmBlock(ParamStore& store, const std::string& name, int in, int out, int stride, int field,
                             bool occlusion_gate, bool rectify, Rng& rng)
    : field_(field), occlusion_gate_(occlusion_gate), rectify_(rectify) {
    feature_conv = Conv2d(store, name + ".feature", in, out, 3, stride, 1, rng);
    gate_conv = Conv2d(store, name + ".gate", in, out, 3, stride, 1, rng);
    if (occlusion_gate_) mask_conv = Conv2d(store, name + ".mask", 2, out, 3, stride, 1, rng);
}

Var GatedTsmBlock::gate(const Var& x, const Tensor& masks) const {
    Var g = gate_conv(x);
    if (!occlusion_gate_) return g;
    if (masks.rank() != 4 || masks.dim(1) != 2 || masks.dim(0) != x.dim(0)) {
        throw ShapeError("occlusion gate expects T×2×H×W masks");
    }
    if (masks.dim(2) % x.dim(2) != 0 || masks.dim(3) % x.dim(3) != 0 || masks.dim(2) / x.dim(2) != masks.dim(3) / x.dim(3)) {
        throw ShapeError("occlusion gate: mask resolution does not reduce to the feature resolution");
    }
    const int factor = static_cast<int>(masks.dim(2) / x.dim(2));
    return g + mask_conv(constant(downsample_nearest(masks, factor)));
}

Var GatedTsmBlock::features(const Var& x) const {
    const Var s = feature_conv(temporal_shift(x, field_));
    return rectify_ ? relu(s) : s;
}

Var GatedTsmBlock::operator()(const Var& x, const Tensor& masks) const {
    return sigmoid(gate(x, masks)) * features(x);
}

void GeneratorConfig::validate() const {
    if (widths.size() != 2) throw ParameterError("generator widths must list two entries");
    if (temporal_field < 0) throw ParameterError("temporal field must be non-negative");
    for (int w : widths) {
        if (w <= 0) throw ParameterError("generator widths must be positive");
        if (w < 2 * temporal_field * shift_slice(w, temporal_field)) {
            throw ParameterError("generator width too small for the temporal field");
        }
    }
    if (4 < 2 * temporal_field * shift_slice(4, temporal_field)) {
        throw ParameterError("temporal field too large for the 4-channel input");
    }
}

FlatConfig GeneratorConfig::to_meta() const {
    FlatConfig m;
    m.set("model", "generator");
    m.set("widths", std::to_string(widths[0]) + "," + std::to_string(widths[1]));
    m.set("temporal_field", std::to_string(temporal_field));
    m.set("occlusion_gate", occlusion_gate ? "1" : "0");
    return m;
}

GeneratorConfig GeneratorConfig::from_meta(const FlatConfig& meta) {
    if (meta.get_string("model", "") != "generator") throw ConfigError("checkpoint is not a generator model");
    GeneratorConfig c;
    if (meta.has("widths")) {
        c.widths.clear();
        std::stringstream ss(meta.get_string("widths", ""));
        std::string item;
        while (std::getline(ss, item, ',')) c.widths.push_back(std::stoi(item));
    }
    c.temporal_field = static_cast<int>(meta.get_int("temporal_field", c.temporal_field));
    c.occlusion_gate = meta.get_bool("occlusion_gate", c.occlusion_gate);
    c.validate();
    return c;
}

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const int a = config_.widths[0], b = config_.widths[1], n = config_.temporal_field;
    const bool og = config_.occlusion_gate;
    e1_ = GatedTsmBlock(params_, "e1", 4, a, 1, n, og, true, rng);
    e2_ = GatedTsmBlock(params_, "e2", a, b, 2, n, og, true, rng);
    e3_ = GatedTsmBlock(params_, "e3", b, b, 2, n, og, true, rng);
    mid_ = GatedTsmBlock(params_, "mid", b, b, 1, n, og, true, rng);
    d1_ = GatedTsmBlock(params_, "d1", b, b, 1, n, og, true, rng);
    d2_ = GatedTsmBlock(params_, "d2", b, a, 1, n, og, true, rng);
    head_ = GatedTsmBlock(params_, "head", a, 3, 1, n, og, false, rng);
}

Var Generator::forward(const Var& frames, const Tensor& hole, const Tensor& amodal, const Tensor& occluded) const {
    const std::int64_t T = frames.dim(0), H = frames.dim(2), W = frames.dim(3);
    if (frames.value().rank() != 4 || frames.dim(1) != 3) throw ShapeError("generator expects T×3×H×W frames");
    for (const Tensor* m : {&hole, &amodal, &occluded}) {
        if (m->shape() != Shape{T, 1, H, W}) throw ShapeError("generator masks must be T×1×H×W");
    }
    if (H % 4 != 0 || W % 4 != 0) throw ShapeError("generator needs H and W divisible by 4");
    const Var h = constant(hole);
    const Var x = concat({frames * (1.0 - h), h}, 1);
    const Tensor masks = concat({constant(occluded), constant(amodal)}, 1).value();

    const Var f1 = e1_(x, masks);
    const Var f2 = e2_(f1, masks);
    const Var f3 = e3_(f2, masks);
    const Var m = mid_(f3, masks);
    const Var u1 = d1_(upsample_nearest2d(m, 2), masks) + f2;
    const Var u2 = d2_(upsample_nearest2d(u1, 2), masks) + f1;
    return sigmoid(head_(u2, masks));
}

Var composite(const Var& generated, const Var& propagated, const Tensor& hole) {
    if (generated.shape() != propagated.shape()) throw ShapeError("composite: clip shapes differ");
    const Var h = constant(hole);
    return h * generated + (1.0 - h) * propagated;
}

}  // namespace voin::generator
