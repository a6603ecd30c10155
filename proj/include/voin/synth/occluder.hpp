#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "voin/core/types.hpp"
#include "voin/synth/scene.hpp"

namespace voin::synth {

struct OccluderSpec {
    std::uint64_t seed = 0;
    int stroke_count = 1;
    double brush_width = 3.0;
    int vertex_count = 4;
    /// When set, the strokes are translated so their pivot (the stroke point
    /// nearest the vertex centroid) sits here (x, y).
    std::optional<std::array<double, 2>> anchor;
    Trajectory trajectory;
    double deformation_amplitude = 0.0;  // px of radial boundary perturbation
    double deformation_frequency = 3.0;  // lobes per revolution
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

using Polyline = std::vector<Point>;

/// Random-walk strokes in frame coordinates, before any animation.
std::vector<Polyline> freeform_strokes(const OccluderSpec& spec, int height, int width);

/// Union of round-brush strokes: a pixel centre is on when it lies within
/// brush_width / 2 of any stroke segment.
Raster gen_freeform_mask(const OccluderSpec& spec, int height, int width);

/// Occluder rasters for frames 0..length-1. `scale` multiplies stroke extent
/// and brush width about the pivot.
std::vector<Raster> animate_occluder(const OccluderSpec& spec, int height, int width, int length, double scale);

Raster rasterize_strokes(const std::vector<Polyline>& strokes, double brush_radius, int height, int width);

}  // namespace voin::synth
