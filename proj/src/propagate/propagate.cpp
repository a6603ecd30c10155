#include "voin/propagate/propagate.hpp"

#include <algorithm>
#include <cmath>

#include "voin/core/error.hpp"

namespace voin::propagate {

namespace {

struct Tap {
    int x[4];
    int y[4];
    double w[4];
    int n = 0;
};

// Bilinear taps with nonzero weight; false when any of them leaves the frame.
bool taps_at(double sx, double sy, int H, int W, Tap& tap) {
    if (!std::isfinite(sx) || !std::isfinite(sy)) return false;
    const double fx = std::floor(sx);
    const double fy = std::floor(sy);
    const double ax = sx - fx;
    const double ay = sy - fy;
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    tap.n = 0;
    const double wx[2] = {1.0 - ax, ax};
    const double wy[2] = {1.0 - ay, ay};
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            const double w = wx[i] * wy[j];
            if (w == 0.0) continue;
            const int x = x0 + i;
            const int y = y0 + j;
            if (x < 0 || y < 0 || x >= W || y >= H) return false;
            tap.x[tap.n] = x;
            tap.y[tap.n] = y;
            tap.w[tap.n] = w;
            ++tap.n;
        }
    }
    return tap.n > 0;
}

void sample_flow(const FlowField& f, const Tap& tap, double& u, double& v) {
    u = 0.0;
    v = 0.0;
    for (int k = 0; k < tap.n; ++k) {
        u += tap.w[k] * f.u(tap.y[k], tap.x[k]);
        v += tap.w[k] * f.v(tap.y[k], tap.x[k]);
    }
}

void check_same_size(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2) throw ShapeError(std::string(what) + ": dimensions disagree");
}

// One pass filling frame t from frame t + step, reading only `prev`.
bool run_pass(const PropagationState& prev, PropagationState& next, const FlowSequence& fwd,
              const FlowSequence& bwd, const MaskSequence& amodal, double tau, int step) {
    const int T = prev.frames.length();
    const int H = prev.frames.height();
    const int W = prev.frames.width();
    bool changed = false;
    for (int t = 0; t < T; ++t) {
        const int s = t + step;
        if (s < 0 || s >= T) continue;
        // to_source maps frame t to frame s; back maps frame s to frame t.
        const FlowField& to_source = step < 0 ? bwd.flows[s] : fwd.flows[t];
        const FlowField& back = step < 0 ? fwd.flows[s] : bwd.flows[t];
        const Raster& src_known = prev.known[s];
        const Raster& src_amodal = amodal.masks[s];
        const Image& src = prev.frames.frames[s];
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (prev.known[t].at(y, x) || !amodal.masks[t].at(y, x)) continue;
                const double u = to_source.u(y, x);
                const double v = to_source.v(y, x);
                Tap tap;
                if (!taps_at(x + u, y + v, H, W, tap)) continue;
                bool ok = true;
                for (int k = 0; k < tap.n && ok; ++k) {
                    ok = src_known.at(tap.y[k], tap.x[k]) && src_amodal.at(tap.y[k], tap.x[k]);
                }
                if (!ok) continue;
                double bu, bv;
                sample_flow(back, tap, bu, bv);
                if (std::hypot(u + bu, v + bv) >= tau) continue;
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int k = 0; k < tap.n; ++k) acc += tap.w[k] * src.at(tap.y[k], tap.x[k], c);
                    next.frames.frames[t].at(y, x, c) = static_cast<float>(acc);
                }
                next.known[t].at(y, x) = 1;
                next.filled_by_flow[t].at(y, x) = 1;
                changed = true;
            }
        }
    }
    return changed;
}

}  // namespace

Warped warp_bilinear(const Image& image, const FlowField& flow, const Raster& valid) {
    check_same_size(image.height, image.width, flow.height, flow.width, "warp_bilinear");
    check_same_size(image.height, image.width, valid.height, valid.width, "warp_bilinear");
    const int H = image.height;
    const int W = image.width;
    Warped out{Image(H, W), Raster(H, W)};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            Tap tap;
            if (!taps_at(x + flow.u(y, x), y + flow.v(y, x), H, W, tap)) continue;
            bool ok = true;
            for (int k = 0; k < tap.n; ++k) ok = ok && valid.at(tap.y[k], tap.x[k]);
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = 0; k < tap.n; ++k) acc += tap.w[k] * image.at(tap.y[k], tap.x[k], c);
                out.image.at(y, x, c) = static_cast<float>(acc);
            }
            out.valid.at(y, x) = ok ? 1 : 0;
        }
    }
    return out;
}

Raster cycle_consistency_mask(const FlowField& fwd, const FlowField& bwd, double tau) {
    check_same_size(fwd.height, fwd.width, bwd.height, bwd.width, "cycle_consistency_mask");
    if (!(tau > 0)) throw ParameterError("cycle threshold must be positive");
    const int H = fwd.height;
    const int W = fwd.width;
    Raster valid(H, W);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double u = fwd.u(y, x);
            const double v = fwd.v(y, x);
            if (!std::isfinite(u) || !std::isfinite(v)) continue;
            Tap tap;
            taps_at(std::clamp(x + u, 0.0, W - 1.0), std::clamp(y + v, 0.0, H - 1.0), H, W, tap);
            double bu, bv;
            sample_flow(bwd, tap, bu, bv);
            valid.at(y, x) = std::hypot(u + bu, v + bv) < tau ? 1 : 0;
        }
    }
    return valid;
}

PropagationState initial_state(const VideoClip& clip, const MaskSequence& occluded) {
    if (occluded.length() != clip.length()) throw ShapeError("initial_state: mask count differs from frame count");
    PropagationState s;
    s.frames = clip;
    for (const auto& m : occluded.masks) {
        check_same_size(m.height, m.width, clip.height(), clip.width(), "initial_state");
        Raster known(m.height, m.width);
        for (std::size_t i = 0; i < known.data.size(); ++i) known.data[i] = m.data[i] ? 0 : 1;
        s.known.push_back(std::move(known));
        s.filled_by_flow.emplace_back(m.height, m.width);
    }
    return s;
}

PropagationState propagate_pixels(PropagationState state, const FlowSequence& fwd, const FlowSequence& bwd,
                                  const MaskSequence& amodal, double tau, int max_sweeps, SweepOrder order) {
    const int T = state.frames.length();
    if (fwd.length() != T - 1 || bwd.length() != T - 1) throw ShapeError("propagate: flows must have length T-1");
    if (amodal.length() != T) throw ShapeError("propagate: amodal mask count differs from frame count");
    if (!(tau > 0)) throw ParameterError("cycle threshold must be positive");
    for (int t = 0; t + 1 < T; ++t) {
        check_same_size(fwd.flows[t].height, fwd.flows[t].width, state.frames.height(), state.frames.width(),
                        "propagate");
        check_same_size(bwd.flows[t].height, bwd.flows[t].width, state.frames.height(), state.frames.width(),
                        "propagate");
    }
    const int first = order == SweepOrder::forward_first ? -1 : 1;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (int step : {first, -first}) {
            const PropagationState snapshot = state;
            changed = run_pass(snapshot, state, fwd, bwd, amodal, tau, step) || changed;
        }
        ++state.sweeps;
        if (!changed) break;
    }
    return state;
}

MaskSequence remaining_hole_mask(const PropagationState& state, const MaskSequence& amodal) {
    MaskSequence hole{{}, MaskKind::hole};
    for (std::size_t t = 0; t < state.known.size(); ++t) {
        Raster h(state.known[t].height, state.known[t].width);
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] = amodal.masks[t].data[i] && !state.known[t].data[i];
        hole.masks.push_back(std::move(h));
    }
    return hole;
}

}  // namespace voin::propagate
