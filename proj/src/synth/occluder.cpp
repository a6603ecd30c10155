#include "voin/synth/occluder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voin/core/error.hpp"
#include "voin/core/rng.hpp"

namespace voin::synth {

namespace {

void check_spec(const OccluderSpec& spec, int height, int width) {
    if (spec.stroke_count <= 0) throw ParameterError("occluder stroke_count must be positive (mask would be empty)");
    if (spec.vertex_count <= 0) throw ParameterError("occluder vertex_count must be positive");
    if (spec.brush_width <= 0) throw ParameterError("occluder brush_width must be positive");
    if (spec.brush_width > std::min(height, width)) {
        throw ParameterError("occluder brush_width " + std::to_string(spec.brush_width) + " exceeds frame size");
    }
}

double segment_distance_sq(const Point& a, const Point& b, double x, double y) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0) t = std::clamp(((x - a.x) * vx + (y - a.y) * vy) / len2, 0.0, 1.0);
    const double dx = a.x + t * vx - x;
    const double dy = a.y + t * vy - y;
    return dx * dx + dy * dy;
}

// Point on the strokes closest to their vertex centroid. Scaling about it
// keeps it inked, so a large enough scale covers any neighbourhood.
Point pivot(const std::vector<Polyline>& strokes) {
    Point c;
    std::size_t n = 0;
    for (const auto& s : strokes) {
        for (const auto& p : s) {
            c.x += p.x;
            c.y += p.y;
            ++n;
        }
    }
    c.x /= static_cast<double>(n);
    c.y /= static_cast<double>(n);
    Point best = strokes.front().front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& s : strokes) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Point& a = s[i];
            const Point& b = s[std::min(i + 1, s.size() - 1)];
            const double vx = b.x - a.x;
            const double vy = b.y - a.y;
            const double len2 = vx * vx + vy * vy;
            const double t = len2 > 0 ? std::clamp(((c.x - a.x) * vx + (c.y - a.y) * vy) / len2, 0.0, 1.0) : 0.0;
            const Point q{a.x + t * vx, a.y + t * vy};
            const double d = (q.x - c.x) * (q.x - c.x) + (q.y - c.y) * (q.y - c.y);
            if (d < best_d) {
                best_d = d;
                best = q;
            }
        }
    }
    return best;
}

}  // namespace

std::vector<Polyline> freeform_strokes(const OccluderSpec& spec, int height, int width) {
    check_spec(spec, height, width);
    Rng rng(spec.seed);
    const double min_side = std::min(height, width);
    std::vector<Polyline> strokes;
    for (int s = 0; s < spec.stroke_count; ++s) {
        Polyline line;
        Point p{rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0)};
        line.push_back(p);
        for (int v = 1; v < spec.vertex_count; ++v) {
            const double angle = rng.uniform(0.0, 2.0 * M_PI);
            const double step = rng.uniform(min_side / 8.0, min_side / 4.0);
            p.x = std::clamp(p.x + step * std::cos(angle), 0.0, width - 1.0);
            p.y = std::clamp(p.y + step * std::sin(angle), 0.0, height - 1.0);
            line.push_back(p);
        }
        strokes.push_back(std::move(line));
    }
    if (spec.anchor) {
        const Point c = pivot(strokes);
        for (auto& s : strokes) {
            for (auto& p : s) {
                p.x += (*spec.anchor)[0] - c.x;
                p.y += (*spec.anchor)[1] - c.y;
            }
        }
    }
    return strokes;
}

Raster rasterize_strokes(const std::vector<Polyline>& strokes, double brush_radius, int height, int width) {
    Raster r(height, width);
    const double r2 = brush_radius * brush_radius;
    for (const auto& line : strokes) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            const Point& a = line[i];
            const Point& b = line[std::min(i + 1, line.size() - 1)];
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - brush_radius)));
            const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + brush_radius)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - brush_radius)));
            const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + brush_radius)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (!r.at(y, x) && segment_distance_sq(a, b, x, y) <= r2) r.at(y, x) = 1;
                }
            }
        }
    }
    return r;
}

Raster gen_freeform_mask(const OccluderSpec& spec, int height, int width) {
    const auto strokes = freeform_strokes(spec, height, width);
    Raster mask = rasterize_strokes(strokes, spec.brush_width / 2.0, height, width);
    if (mask.count() == 0) throw SynthesisError("free-form mask came out empty; try a different seed");
    return mask;
}

std::vector<Raster> animate_occluder(const OccluderSpec& spec, int height, int width, int length, double scale) {
    const auto base = freeform_strokes(spec, height, width);
    const Point anchor = pivot(base);
    Rng rng(derive_seed(spec.seed, 1));
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double phase_rate = rng.uniform(0.5, 1.5);
    const auto& tr = spec.trajectory;
    std::vector<Raster> frames;
    for (int t = 0; t < length; ++t) {
        const double ax = anchor.x + t * tr.dx;
        const double ay = anchor.y + t * tr.dy;
        const double rot = t * tr.rotation;
        const double s = scale * (1.0 + t * tr.scale_rate);
        const double c = std::cos(rot);
        const double sn = std::sin(rot);
        std::vector<Polyline> moved = base;
        for (auto& line : moved) {
            for (auto& p : line) {
                const double ox = p.x - anchor.x;
                const double oy = p.y - anchor.y;
                double rx = s * (c * ox - sn * oy);
                double ry = s * (sn * ox + c * oy);
                const double radius = std::hypot(rx, ry);
                if (radius > 1e-9 && spec.deformation_amplitude != 0.0) {
                    const double theta = std::atan2(ry, rx);
                    const double bump = spec.deformation_amplitude *
                                        std::sin(spec.deformation_frequency * theta + phase + phase_rate * t);
                    const double k = std::max(0.0, radius + bump) / radius;
                    rx *= k;
                    ry *= k;
                }
                p.x = ax + rx;
                p.y = ay + ry;
            }
        }
        frames.push_back(rasterize_strokes(moved, std::max(0.0, s) * spec.brush_width / 2.0, height, width));
    }
    return frames;
}

}  // namespace voin::synth
