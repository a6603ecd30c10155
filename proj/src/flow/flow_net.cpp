#include "voin/flow/flow_net.hpp"

#include <sstream>

#include "voin/core/error.hpp"
#include "voin/core/rng.hpp"

namespace voin::flow {

using namespace voin::nn;

Raster amodal_contour(const Raster& mask) {
    Raster out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(y, x)) continue;
            const bool interior = mask.contains(y - 1, x) && mask.at(y - 1, x) && mask.contains(y + 1, x) &&
                                  mask.at(y + 1, x) && mask.contains(y, x - 1) && mask.at(y, x - 1) &&
                                  mask.contains(y, x + 1) && mask.at(y, x + 1);
            out.at(y, x) = interior ? 0 : 1;
        }
    }
    return out;
}

Tensor contour_tensor(const Tensor& masks) {
    if (masks.rank() != 4 || masks.dim(1) != 1) throw ShapeError("contour_tensor expects N×1×H×W");
    const std::int64_t N = masks.dim(0), H = masks.dim(2), W = masks.dim(3);
    Tensor out(masks.shape());
    for (std::int64_t n = 0; n < N; ++n) {
        Raster r(static_cast<int>(H), static_cast<int>(W));
        for (std::int64_t i = 0; i < H * W; ++i) r.data[static_cast<std::size_t>(i)] = masks[n * H * W + i] >= 0.5;
        const Raster c = amodal_contour(r);
        for (std::int64_t i = 0; i < H * W; ++i) out[n * H * W + i] = c.data[static_cast<std::size_t>(i)];
    }
    return out;
}

FlowSequence initial_flow(const FlowSequence& flows, const MaskSequence& occluded) {
    if (occluded.length() != flows.length() + 1) throw ShapeError("initial_flow: need T masks for T-1 flows");
    FlowSequence out = flows;
    const int offset = flows.direction == FlowDirection::forward ? 0 : 1;
    for (int t = 0; t < flows.length(); ++t) {
        FlowField& f = out.flows[t];
        const Raster& occ = occluded.masks[t + offset];
        if (occ.height != f.height || occ.width != f.width) throw ShapeError("initial_flow: mask size differs");
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x)
                if (occ.at(y, x)) {
                    f.u(y, x) = 0.0f;
                    f.v(y, x) = 0.0f;
                }
    }
    return out;
}

FlowCondition make_condition(const Tensor& clip, const Tensor& initial_fwd, const Tensor& initial_bwd,
                             const Tensor& visible, const Tensor& amodal) {
    const std::int64_t T = clip.dim(0);
    if (T < 2) throw ShapeError("flow condition needs at least two frames");
    if (initial_fwd.dim(0) != T - 1 || initial_bwd.dim(0) != T - 1) {
        throw ShapeError("flow condition: initial flows must have T-1 entries");
    }
    const Var c = constant(clip);
    const Var vis = constant(visible);
    const Var amo = constant(amodal);
    const Var head = slice(c, 0, 0, T - 1);
    const Var tail = slice(c, 0, 1, T - 1);
    FlowCondition cond;
    cond.frame = concat({head, tail}, 0);
    cond.next_frame = concat({tail, head}, 0);
    cond.initial = concat({constant(initial_fwd), constant(initial_bwd)}, 0);
    cond.visible = concat({slice(vis, 0, 0, T - 1), slice(vis, 0, 1, T - 1)}, 0);
    cond.amodal = concat({slice(amo, 0, 0, T - 1), slice(amo, 0, 1, T - 1)}, 0);
    cond.contour = constant(contour_tensor(cond.amodal.value()));
    return cond;
}

void FlowNetConfig::validate() const {
    if (widths.size() < 2) throw ParameterError("flow net needs at least one down level");
    for (int w : widths) {
        if (w <= 0) throw ParameterError("flow net widths must be positive");
    }
}

FlatConfig FlowNetConfig::to_meta() const {
    FlatConfig m;
    m.set("model", "flow");
    m.set("amodal_guidance", amodal_guidance ? "1" : "0");
    std::string w;
    for (std::size_t i = 0; i < widths.size(); ++i) w += (i ? "," : "") + std::to_string(widths[i]);
    m.set("widths", w);
    return m;
}

FlowNetConfig FlowNetConfig::from_meta(const FlatConfig& meta) {
    if (meta.get_string("model", "") != "flow") throw ConfigError("checkpoint is not a flow model");
    FlowNetConfig c;
    c.amodal_guidance = meta.get_bool("amodal_guidance", c.amodal_guidance);
    if (meta.has("widths")) {
        c.widths.clear();
        std::stringstream ss(meta.get_string("widths", ""));
        std::string item;
        while (std::getline(ss, item, ',')) c.widths.push_back(std::stoi(item));
    }
    return c;
}

FlowNet::FlowNet(const FlowNetConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const auto& w = config_.widths;
    stem_ = Conv2d(params_, "stem", 9, w[0], 3, 1, 1, rng);
    if (config_.amodal_guidance) {
        // Zero-initialized: guidance starts neutral, and every other weight matches the unguided net.
        Rng guide_rng(derive_seed(seed, 1));
        guide_ = Conv2d(params_, "guide", 2, w[0], 3, 1, 1, guide_rng, false);
        guide_.weight.mutable_value().fill(0.0);
    }
    for (int i = 1; i <= config_.levels(); ++i) {
        down_.emplace_back(params_, "down" + std::to_string(i), w[i - 1], w[i], 3, 2, 1, rng);
    }
    for (int i = config_.levels(); i >= 1; --i) {
        up_.emplace_back(params_, "up" + std::to_string(i), w[i] + w[i - 1], w[i - 1], 3, 1, 1, rng);
    }
    head_ = Conv2d(params_, "head", w[0], 2, 3, 1, 1, rng);
    for (double& v : head_.weight.mutable_value().values()) v *= 0.1;
}

Var FlowNet::residual(const FlowCondition& cond) const {
    const std::int64_t H = cond.frame.dim(2), W = cond.frame.dim(3);
    const std::int64_t factor = std::int64_t{1} << config_.levels();
    if (H % factor != 0 || W % factor != 0) {
        throw ShapeError("flow net needs H and W divisible by " + std::to_string(factor));
    }
    Var x = stem_(concat({cond.frame, cond.next_frame, cond.initial, cond.visible}, 1));
    if (config_.amodal_guidance) x = x + guide_(concat({cond.amodal, cond.contour}, 1));
    x = leaky_relu(x);
    std::vector<Var> skips{x};
    for (const auto& d : down_) {
        x = leaky_relu(d(x));
        skips.push_back(x);
    }
    for (std::size_t i = 0; i < up_.size(); ++i) {
        const Var& skip = skips[skips.size() - 2 - i];
        x = leaky_relu(up_[i](concat({upsample_nearest2d(x, 2), skip}, 1)));
    }
    return head_(x);
}

Var FlowNet::forward(const FlowCondition& cond) const {
    return cond.initial + cond.amodal * residual(cond);
}

}  // namespace voin::flow
