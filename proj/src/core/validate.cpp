#include "voin/core/validate.hpp"

#include <cmath>
#include <string>

#include "voin/core/error.hpp"

namespace voin {

namespace {

std::string where(const char* name, int t, int y, int x) {
    return std::string(name) + " frame " + std::to_string(t) + " pixel (x=" + std::to_string(x) +
           ", y=" + std::to_string(y) + ")";
}

void check_masks(const MaskSequence& seq, const char* name, int T, int H, int W) {
    if (seq.length() != T) {
        throw ValidationError(std::string(name) + " length " + std::to_string(seq.length()) + " != clip length " +
                              std::to_string(T));
    }
    for (int t = 0; t < T; ++t) {
        const Raster& r = seq.masks[t];
        if (r.height != H || r.width != W) {
            throw ValidationError(std::string(name) + " frame " + std::to_string(t) + " has wrong dimensions");
        }
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (r.at(y, x) > 1) throw ValidationError(where(name, t, y, x) + " is not binary");
            }
        }
    }
}

void check_flows(const FlowSequence& seq, const char* name, int T, int H, int W) {
    if (seq.length() != T - 1) {
        throw ValidationError(std::string(name) + " length " + std::to_string(seq.length()) + " != T-1 = " +
                              std::to_string(T - 1));
    }
    for (int t = 0; t < seq.length(); ++t) {
        const FlowField& f = seq.flows[t];
        if (f.height != H || f.width != W) {
            throw ValidationError(std::string(name) + " field " + std::to_string(t) + " has wrong dimensions");
        }
        for (float v : f.uv) {
            if (!std::isfinite(v)) throw ValidationError(std::string(name) + " field " + std::to_string(t) + " is not finite");
        }
    }
}

}  // namespace

void validate_clip(const VideoClip& clip) {
    if (clip.length() < 2) throw ValidationError("clip must have at least 2 frames");
    const int H = clip.height(), W = clip.width();
    if (H <= 0 || W <= 0) throw ValidationError("clip frames are empty");
    for (int t = 0; t < clip.length(); ++t) {
        const Image& f = clip.frames[t];
        if (f.height != H || f.width != W || f.data.size() != static_cast<std::size_t>(H) * W * 3) {
            throw ValidationError("clip frame " + std::to_string(t) + " has wrong dimensions");
        }
        for (float v : f.data) {
            if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("clip frame " + std::to_string(t) + " has values outside [0,1]");
        }
    }
}

void validate_sample(const VideoClip& clip, const MaskSequence& visible, const MaskSequence& amodal,
                     const MaskSequence& occluded, const FlowSequence& flow_fwd, const FlowSequence& flow_bwd) {
    validate_clip(clip);
    const int T = clip.length(), H = clip.height(), W = clip.width();
    check_masks(visible, "visible", T, H, W);
    check_masks(amodal, "amodal", T, H, W);
    check_masks(occluded, "occluded", T, H, W);
    for (int t = 0; t < T; ++t) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const bool vis = visible.masks[t].at(y, x), amo = amodal.masks[t].at(y, x), occ = occluded.masks[t].at(y, x);
                if (vis && !amo) throw ValidationError("visible not subset of amodal at " + where("visible", t, y, x));
                if (occ != (amo && !vis)) {
                    throw ValidationError("occluded != amodal AND NOT visible at " + where("occluded", t, y, x));
                }
            }
        }
    }
    check_flows(flow_fwd, "flow_fwd", T, H, W);
    check_flows(flow_bwd, "flow_bwd", T, H, W);
}

void validate_sample(const Sample& s) {
    validate_sample(s.clip, s.visible, s.amodal, s.occluded, s.flow_fwd, s.flow_bwd);
    if (s.gt_clip) {
        validate_clip(*s.gt_clip);
        if (s.gt_clip->length() != s.clip.length() || s.gt_clip->height() != s.clip.height() ||
            s.gt_clip->width() != s.clip.width()) {
            throw ValidationError("gt clip dimensions differ from input clip");
        }
    }
}

}  // namespace voin
