#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voin/core/config.hpp"
#include "voin/core/sample.hpp"
#include "voin/synth/occluder.hpp"
#include "voin/synth/scene.hpp"

namespace voin::synth {

/// |occluded| / |amodal|, or 0 when the amodal mask is empty.
double occlusion_degree(const Raster& occluded, const Raster& amodal);

struct SynthSample {
    Sample sample;  // clip is the corrupted clip, gt_clip the un-occluded one
    std::vector<double> degrees;
    double mean_degree() const;
};

/// Animates the occluders at a common scale found by bisection (at most 20
/// steps) so the mean degree lands in target ± tol, then composites them
/// with their own texture. Clips are quantized to the 8-bit grid.
/// Throws SynthesisError when the target cannot be bracketed or reached.
SynthSample synth_sample(const SceneSpec& scene, const std::vector<OccluderSpec>& occluders, double target_degree,
                         double tol);

struct SynthConfig {
    int height = 32;
    int width = 32;
    int length = 6;
    int classes = kNumClasses;
    int num = 8;
    std::uint64_t seed = 0;
    double degree_min = 0.1;
    double degree_max = 0.7;
    double tol = 0.03;
    std::string motion = "translation";  // translation | affine
    int max_speed = 2;                   // px/frame of the object
    int occluders = 1;
    int stroke_count = 2;
    int vertex_count = 4;
    double brush_width = 0.0;  // 0 picks min(H, W) / 8
    double deformation_amplitude = 1.0;
    int threads = 0;  // 0 uses the hardware concurrency

    static const std::vector<std::string>& keys();
    static SynthConfig from_config(const FlatConfig& cfg);
    void validate() const;
};

/// Random scene for `seed`: class-tied shape, textures, and a trajectory that
/// keeps the object inside the frame. `translation` motion uses integer
/// velocities and quarter-pixel centres so flows are exact.
SceneSpec random_scene(const SynthConfig& cfg, std::uint64_t seed, int object_class);
/// Occluders that start over the object and drift relative to it.
std::vector<OccluderSpec> random_occluders(const SynthConfig& cfg, const SceneSpec& scene, std::uint64_t seed);

/// One sample with retries on seed + 1 .. seed + 5.
SynthSample synth_one(const SynthConfig& cfg, std::uint64_t seed, int object_class, double target_degree,
                      std::vector<std::string>* failures = nullptr);

struct IndexRow {
    std::string sample_id;
    std::uint64_t seed = 0;
    int object_class = 0;
    double mean_degree = 0.0;
};

struct DatasetReport {
    std::vector<IndexRow> rows;
    std::vector<std::string> failures;  // synthesis errors that were retried
};

/// Writes sample_%04d directories and index.csv under `out`. Targets are
/// stratified over [degree_min, degree_max]; classes cycle through 0..K-1.
DatasetReport synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out);

std::vector<IndexRow> read_index(const std::filesystem::path& path);

}  // namespace voin::synth
