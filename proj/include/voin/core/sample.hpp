#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "voin/core/types.hpp"

namespace voin {

/// One benchmark sample on disk:
///   clip/frame_%04d.ppm       corrupted input
///   gt/frame_%04d.ppm         un-occluded ground truth (optional)
///   masks_visible/%04d.pgm, masks_amodal/%04d.pgm, masks_occ/%04d.pgm
///   flow_fwd/%04d.flo, flow_bwd/%04d.flo
///   meta.txt                  class and seed
struct Sample {
    VideoClip clip;
    std::optional<VideoClip> gt_clip;
    MaskSequence visible{{}, MaskKind::visible};
    MaskSequence amodal{{}, MaskKind::amodal};
    MaskSequence occluded{{}, MaskKind::occluded};
    FlowSequence flow_fwd{{}, FlowDirection::forward};
    FlowSequence flow_bwd{{}, FlowDirection::backward};
    int object_class = 0;
    std::uint64_t seed = 0;
};

Sample load_sample(const std::filesystem::path& dir);
void save_sample(const Sample& sample, const std::filesystem::path& dir);

}  // namespace voin
