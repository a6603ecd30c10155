#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace voin {

/// H×W×3 RGB frame, interleaved, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const Image&) const = default;
};

/// Binary H×W raster, one byte per pixel holding 0 or 1.
struct Raster {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Raster() = default;
    Raster(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int y, int x) const { return y >= 0 && x >= 0 && y < height && x < width; }

    std::size_t count() const;

    bool operator==(const Raster&) const = default;
};

/// Dense H×W field of (u, v) displacements in pixels, interleaved.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> uv;

    FlowField() = default;
    FlowField(int h, int w, float fill = 0.0f)
        : height(h), width(w), uv(static_cast<std::size_t>(h) * w * 2, fill) {}

    float& u(int y, int x) { return uv[(static_cast<std::size_t>(y) * width + x) * 2]; }
    float& v(int y, int x) { return uv[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
    float u(int y, int x) const { return uv[(static_cast<std::size_t>(y) * width + x) * 2]; }
    float v(int y, int x) const { return uv[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }

    bool operator==(const FlowField&) const = default;
};

struct VideoClip {
    std::vector<Image> frames;

    int length() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int width() const { return frames.empty() ? 0 : frames.front().width; }

    bool operator==(const VideoClip&) const = default;
};

enum class MaskKind { visible, amodal, occluded, hole };

struct MaskSequence {
    std::vector<Raster> masks;
    MaskKind kind = MaskKind::visible;

    int length() const { return static_cast<int>(masks.size()); }

    bool operator==(const MaskSequence&) const = default;
};

enum class FlowDirection { forward, backward };

/// Forward sequences hold t→t+1 fields, backward sequences t+1→t, both of length T−1.
struct FlowSequence {
    std::vector<FlowField> flows;
    FlowDirection direction = FlowDirection::forward;

    int length() const { return static_cast<int>(flows.size()); }

    bool operator==(const FlowSequence&) const = default;
};

/// Loss weights and architectural constants shared across modules.
struct HyperParams {
    double lambda1 = 1.0;    // dice weight in the shape loss
    double lambda2 = 0.5;    // Laplacian pyramid weight
    double lambda3 = 1.0;    // flow gradient matching
    double lambda4 = 0.1;    // flow smoothness away from contours
    double lambda5 = 1.0;    // content loss outside the amodal mask
    double lambda6 = 10.0;   // content weight inside the appearance loss
    double lambda_flow = 1.0;
    double lambda_app = 0.1;

    int heads = 4;
    int patch_r1 = 4;
    int patch_r2 = 4;
    int key_dim = 16;
    int temporal_field = 2;
    double cycle_threshold = 5.0;

    /// Throws ParameterError naming the first violated constraint. When
    /// height/width are positive the patch sizes must divide them.
    void validate(int height = 0, int width = 0) const;
};

std::string to_string(MaskKind kind);

}  // namespace voin
