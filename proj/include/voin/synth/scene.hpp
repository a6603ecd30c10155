#pragma once

#include <cstdint>

#include "voin/core/types.hpp"
#include "voin/synth/texture.hpp"

namespace voin::synth {

inline constexpr int kNumClasses = 4;

/// Object silhouettes, one per class.
enum class ShapeKind { ellipse, rectangle, triangle, diamond };

ShapeKind shape_for_class(int object_class);

/// Per-frame motion: at frame t the body sits at origin + t·(dx, dy),
/// rotated by angle0 + t·rotation and scaled by 1 + t·scale_rate.
struct Trajectory {
    double dx = 0.0;
    double dy = 0.0;
    double rotation = 0.0;
    double scale_rate = 0.0;
};

struct ObjectShape {
    ShapeKind kind = ShapeKind::ellipse;
    double center_x = 0.0;
    double center_y = 0.0;
    double radius_x = 4.0;
    double radius_y = 4.0;
    double angle0 = 0.0;
};

struct SceneSpec {
    std::uint64_t seed = 0;
    int height = 32;
    int width = 32;
    int length = 4;
    int object_class = 0;
    ObjectShape shape;
    TextureSpec object_texture;
    Trajectory trajectory;
    TextureSpec background_texture;
};

/// Rigid placement of the object at one frame.
struct Pose {
    double cx, cy, angle, scale;
    /// Frame coordinates → object coordinates.
    void to_object(double x, double y, double& qx, double& qy) const;
    /// Object coordinates → frame coordinates.
    void to_frame(double qx, double qy, double& x, double& y) const;
};

Pose pose_at(const SceneSpec& scene, int t);
bool shape_contains(const ObjectShape& shape, double qx, double qy);

struct RenderedScene {
    VideoClip gt_clip;
    MaskSequence amodal{{}, MaskKind::amodal};
    FlowSequence flow_fwd{{}, FlowDirection::forward};
    FlowSequence flow_bwd{{}, FlowDirection::backward};
};

/// Rasterizes pixel centres (nearest-pixel, no antialiasing). Flow is the
/// object's displacement at object pixels and zero on the static background.
/// Throws BoundsError when the object touches the frame border or vanishes.
RenderedScene render_scene(const SceneSpec& scene);

}  // namespace voin::synth
