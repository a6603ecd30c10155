#include "voin/synth/texture.hpp"

#include <cmath>

namespace voin::synth {

namespace {

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
    const std::uint64_t key = static_cast<std::uint64_t>(ix) * 0x9E3779B1ULL ^ (static_cast<std::uint64_t>(iy) << 32);
    return static_cast<double>(derive_seed(seed, key) >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double sx = smoothstep(x - fx);
    const double sy = smoothstep(y - fy);
    const double top = lattice_value(seed, ix, iy) * (1 - sx) + lattice_value(seed, ix + 1, iy) * sx;
    const double bottom = lattice_value(seed, ix, iy + 1) * (1 - sx) + lattice_value(seed, ix + 1, iy + 1) * sx;
    return top * (1 - sy) + bottom * sy;
}

Color blend(const Color& a, const Color& b, double w) {
    Color out;
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(a[c] * (1.0 - w) + b[c] * w);
    return out;
}

}  // namespace

Color sample_texture(const TextureSpec& texture, double x, double y) {
    const double ca = std::cos(texture.angle);
    const double sa = std::sin(texture.angle);
    const double rx = ca * x + sa * y;
    const double ry = -sa * x + ca * y;
    switch (texture.kind) {
        case TextureKind::checker: {
            const auto cx = static_cast<std::int64_t>(std::floor(rx / texture.scale));
            const auto cy = static_cast<std::int64_t>(std::floor(ry / texture.scale));
            return ((cx + cy) & 1) ? texture.secondary : texture.primary;
        }
        case TextureKind::gradient: {
            const double w = 0.5 + 0.5 * std::sin(2.0 * M_PI * rx / texture.scale);
            return blend(texture.primary, texture.secondary, w);
        }
        case TextureKind::noise: {
            const double w = 0.65 * value_noise(texture.seed, x / texture.scale, y / texture.scale) +
                             0.35 * value_noise(texture.seed ^ 0x5bd1e995ULL, 2 * x / texture.scale, 2 * y / texture.scale);
            return blend(texture.primary, texture.secondary, w);
        }
    }
    return texture.primary;
}

TextureSpec random_texture(TextureKind kind, Rng& rng, double lo, double hi) {
    TextureSpec t;
    t.kind = kind;
    for (int c = 0; c < 3; ++c) t.primary[c] = static_cast<float>(rng.uniform(lo, hi));
    for (int c = 0; c < 3; ++c) t.secondary[c] = static_cast<float>(rng.uniform(lo, hi));
    t.scale = rng.uniform(3.0, 7.0);
    t.angle = rng.uniform(0.0, M_PI);
    t.seed = rng.next_u64();
    return t;
}

}  // namespace voin::synth
