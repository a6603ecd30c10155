#pragma once

#include <cstdint>
#include <filesystem>

#include "voin/core/types.hpp"

namespace voin {

namespace fs = std::filesystem;

/// 8-bit quantization used by every writer: round half up, clamp to [0,255].
std::uint8_t quantize_unit(double value);

// Single-file codecs.
Image read_ppm(const fs::path& path);
void write_ppm(const Image& image, const fs::path& path);
/// P5 reader; any byte ≥ 128 loads as 1.
Raster read_pgm(const fs::path& path);
void write_pgm(const Raster& raster, const fs::path& path);
/// Middlebury .flo: "PIEH", LE int32 width, LE int32 height, LE float32 (u,v) pairs.
FlowField load_flow(const fs::path& path);
void save_flow(const FlowField& flow, const fs::path& path);

// Directory codecs. Clips use frame_%04d.ppm, masks %04d.pgm, flows %04d.flo.
VideoClip load_clip(const fs::path& dir);
void save_clip(const VideoClip& clip, const fs::path& dir);
MaskSequence load_masks(const fs::path& dir, MaskKind kind = MaskKind::visible);
void save_masks(const MaskSequence& masks, const fs::path& dir);
FlowSequence load_flow_sequence(const fs::path& dir, FlowDirection direction);
void save_flow_sequence(const FlowSequence& flows, const fs::path& dir);

/// Quantizes a clip to the 8-bit grid so it survives save/load unchanged.
VideoClip quantized(const VideoClip& clip);

}  // namespace voin
