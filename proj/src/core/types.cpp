#include "voin/core/types.hpp"

#include <algorithm>

#include "voin/core/error.hpp"

namespace voin {

std::size_t Raster::count() const {
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void HyperParams::validate(int height, int width) const {
    const std::pair<const char*, double> weights[] = {
        {"lambda1", lambda1}, {"lambda2", lambda2}, {"lambda3", lambda3},       {"lambda4", lambda4},
        {"lambda5", lambda5}, {"lambda6", lambda6}, {"lambda_flow", lambda_flow}, {"lambda_app", lambda_app},
    };
    for (const auto& [name, value] : weights) {
        if (!(value >= 0.0)) throw ParameterError(std::string(name) + " must be nonnegative");
    }
    if (heads < 1) throw ParameterError("heads must be positive");
    if (patch_r1 < 1 || patch_r2 < 1) throw ParameterError("patch sizes must be positive");
    if (key_dim < 1) throw ParameterError("key_dim must be positive");
    if (temporal_field < 1) throw ParameterError("temporal_field must be positive");
    if (!(cycle_threshold > 0.0)) throw ParameterError("cycle_threshold must be positive");
    if (height > 0 && height % patch_r1 != 0) throw ParameterError("patch_r1 must divide the frame height");
    if (width > 0 && width % patch_r2 != 0) throw ParameterError("patch_r2 must divide the frame width");
}

std::string to_string(MaskKind kind) {
    switch (kind) {
    case MaskKind::visible: return "visible";
    case MaskKind::amodal: return "amodal";
    case MaskKind::occluded: return "occluded";
    case MaskKind::hole: return "hole";
    }
    return "unknown";
}

}  // namespace voin
