#include "voin/synth/scene.hpp"

#include <cmath>

#include "voin/core/error.hpp"

namespace voin::synth {

ShapeKind shape_for_class(int object_class) {
    return static_cast<ShapeKind>(((object_class % 4) + 4) % 4);
}

void Pose::to_object(double x, double y, double& qx, double& qy) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double px = x - cx;
    const double py = y - cy;
    qx = (c * px + s * py) / scale;
    qy = (-s * px + c * py) / scale;
}

void Pose::to_frame(double qx, double qy, double& x, double& y) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    x = cx + scale * (c * qx - s * qy);
    y = cy + scale * (s * qx + c * qy);
}

Pose pose_at(const SceneSpec& scene, int t) {
    const auto& tr = scene.trajectory;
    return Pose{scene.shape.center_x + t * tr.dx, scene.shape.center_y + t * tr.dy,
                scene.shape.angle0 + t * tr.rotation, 1.0 + t * tr.scale_rate};
}

bool shape_contains(const ObjectShape& shape, double qx, double qy) {
    const double ux = qx / shape.radius_x;
    const double uy = qy / shape.radius_y;
    switch (shape.kind) {
        case ShapeKind::ellipse: return ux * ux + uy * uy <= 1.0;
        case ShapeKind::rectangle: return std::abs(ux) <= 1.0 && std::abs(uy) <= 1.0;
        case ShapeKind::diamond: return std::abs(ux) + std::abs(uy) <= 1.0;
        case ShapeKind::triangle:
            // apex at (0,-1), base from (-1,1) to (1,1)
            return uy <= 1.0 && 2.0 * std::abs(ux) <= uy + 1.0;
    }
    return false;
}

RenderedScene render_scene(const SceneSpec& scene) {
    if (scene.height < 3 || scene.width < 3 || scene.length < 2) {
        throw ParameterError("scene needs H, W >= 3 and T >= 2");
    }
    if (scene.shape.radius_x <= 0 || scene.shape.radius_y <= 0) throw ParameterError("object radii must be positive");
    const int H = scene.height;
    const int W = scene.width;
    const int T = scene.length;
    RenderedScene out;
    std::vector<Pose> poses;
    for (int t = 0; t < T; ++t) {
        poses.push_back(pose_at(scene, t));
        if (poses.back().scale <= 0) throw BoundsError("object scale reaches zero at frame " + std::to_string(t));
    }

    for (int t = 0; t < T; ++t) {
        Image frame(H, W);
        Raster support(H, W);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double qx, qy;
                poses[t].to_object(x, y, qx, qy);
                const bool inside = shape_contains(scene.shape, qx, qy);
                const Color c = inside ? sample_texture(scene.object_texture, qx, qy)
                                       : sample_texture(scene.background_texture, x, y);
                for (int ch = 0; ch < 3; ++ch) frame.at(y, x, ch) = c[ch];
                if (!inside) continue;
                if (x == 0 || y == 0 || x == W - 1 || y == H - 1) {
                    throw BoundsError("object touches the frame border at frame " + std::to_string(t));
                }
                support.at(y, x) = 1;
            }
        }
        if (support.count() == 0) throw BoundsError("object has no pixels at frame " + std::to_string(t));
        out.gt_clip.frames.push_back(std::move(frame));
        out.amodal.masks.push_back(std::move(support));
    }

    // Displacement of the object point under pixel p from frame `from` to frame `to`.
    auto displacement_field = [&](int from, int to) {
        FlowField f(H, W);
        const Raster& support = out.amodal.masks[from];
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (!support.at(y, x)) continue;
                double qx, qy, nx, ny;
                poses[from].to_object(x, y, qx, qy);
                poses[to].to_frame(qx, qy, nx, ny);
                f.u(y, x) = static_cast<float>(nx - x);
                f.v(y, x) = static_cast<float>(ny - y);
            }
        }
        return f;
    };
    for (int t = 0; t + 1 < T; ++t) {
        out.flow_fwd.flows.push_back(displacement_field(t, t + 1));
        out.flow_bwd.flows.push_back(displacement_field(t + 1, t));
    }
    return out;
}

}  // namespace voin::synth
