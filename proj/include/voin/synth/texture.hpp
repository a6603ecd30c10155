#pragma once

#include <array>
#include <cstdint>

#include "voin/core/rng.hpp"

namespace voin::synth {

using Color = std::array<float, 3>;

enum class TextureKind { checker, gradient, noise };

/// Procedural texture evaluated in continuous coordinates.
struct TextureSpec {
    TextureKind kind = TextureKind::checker;
    Color primary{0.2f, 0.2f, 0.2f};
    Color secondary{0.8f, 0.8f, 0.8f};
    double scale = 4.0;   // checker cell, gradient period, or noise lattice spacing
    double angle = 0.0;   // orientation of checker and gradient
    std::uint64_t seed = 0;
};

Color sample_texture(const TextureSpec& texture, double x, double y);

/// Random texture of the given kind with colours drawn inside [lo, hi].
TextureSpec random_texture(TextureKind kind, Rng& rng, double lo = 0.1, double hi = 0.9);

}  // namespace voin::synth
