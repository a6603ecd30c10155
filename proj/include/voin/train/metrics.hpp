#pragma once

#include <vector>

#include "voin/core/types.hpp"

namespace voin::train {

constexpr double kPsnrCap = 100.0;

/// 10·log10(1/MSE) over the RGB values of region pixels (all pixels when
/// `region` is null). Capped at 100 dB; an empty region also gives the cap.
double psnr(const VideoClip& y, const VideoClip& gt, const std::vector<Raster>* region = nullptr);

/// Mean SSIM over frames on BT.601 luma, 11×11 Gaussian window (σ = 1.5),
/// valid windows only. The window radius shrinks to (min(H, W) - 1) / 2 on small frames.
double ssim(const VideoClip& y, const VideoClip& gt);

/// Mean endpoint distance over region pixels (all pixels when null); 0 for an empty region.
double epe(const std::vector<FlowField>& pred, const std::vector<FlowField>& gt,
           const std::vector<Raster>* region = nullptr);

/// Per-frame IoU in percent averaged over frames; an empty union scores 100.
double miou(const std::vector<Raster>& pred, const std::vector<Raster>& gt);

/// Regions on which forward flow t and backward flow t are scored: mask t and mask t+1.
std::vector<Raster> flow_regions(const MaskSequence& masks, FlowDirection direction);

}  // namespace voin::train
