#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "voin/train/dataset.hpp"
#include "voin/train/run_config.hpp"

namespace voin::train {

struct SampleReport {
    std::string sample_id;
    double psnr_occ = 0;
    double ssim = 0;
    double epe_occ = 0;
    double miou = 0;
    double degree = 0;
    int object_class = 0;
};

struct MetricsReport {
    std::vector<SampleReport> rows;
    double psnr_occ = 0;
    double ssim = 0;
    double epe_occ = 0;
    double miou = 0;
    std::size_t filled = 0;        // pixels written by propagation, all samples
    std::size_t occluded = 0;      // ground-truth occluded pixels, all samples
    std::size_t holes_left = 0;    // pixels handed to the generator
};

/// Networks for inference; absent checkpoints stay empty.
struct InferenceModels {
    std::optional<shape::ShapeNet> shape;
    std::optional<flow::FlowNet> flow;
    std::optional<generator::Generator> gen;

    /// Loads shape.ckpt, flow.ckpt and generator.ckpt from `dir` when present.
    static InferenceModels load(const std::filesystem::path& dir);
};

struct PipelineOutput {
    MaskSequence amodal{{}, MaskKind::amodal};    // predicted, OR'd with visible
    MaskSequence occluded{{}, MaskKind::occluded};
    FlowSequence flow_fwd{{}, FlowDirection::forward};
    FlowSequence flow_bwd{{}, FlowDirection::backward};
    VideoClip propagated;
    MaskSequence hole{{}, MaskKind::hole};
    VideoClip final_clip;  // quantized
    std::size_t filled = 0;
};

/// shape → flow → propagate → inpaint → composite for one sample. Oracle mode
/// substitutes ground-truth masks and flow. Throws ConfigError naming the stage
/// whose network is needed but missing.
PipelineOutput run_pipeline(const SampleTensors& s, const InferenceModels& models, const RunConfig& config);

SampleReport score_sample(const SampleTensors& s, const PipelineOutput& out);

/// Runs the pipeline on every sample; writes report.csv, report.json, per-sample
/// outputs under samples/ and comparison grids under grids/ into config.out.
MetricsReport evaluate(const RunConfig& config, const InferenceModels& models, const std::vector<SampleTensors>& data);
MetricsReport evaluate(const RunConfig& config, const std::filesystem::path& ckpt_dir);

/// gt | corrupted | propagated | final, one row per frame.
Image comparison_grid(const VideoClip& gt, const VideoClip& corrupted, const VideoClip& propagated,
                      const VideoClip& final_clip);

void write_report(const std::filesystem::path& dir, const MetricsReport& report);

struct AblationRow {
    std::string name;
    Toggles toggles;
};

/// `key = value` lines form the shared run config; `row <name> OG=1 TP=0 MD=0 STAM=0 F=0`
/// lines add rows in order (omitted toggles default to 1).
struct AblationMatrix {
    FlatConfig base;
    std::vector<AblationRow> rows;
    static AblationMatrix parse(const std::string& text);
    static AblationMatrix load(const std::filesystem::path& path);
    /// The six rows B_I, +OG, +TP, +MD, +STAM, +F.
    static std::vector<AblationRow> standard_rows();
};

struct AblationResult {
    AblationRow row;
    std::int64_t flow_params = 0;
    std::int64_t generator_params = 0;
    std::int64_t adversary_params = 0;
    MetricsReport report;
};

/// Trains and evaluates each row with the shared seed and data under out/<row>,
/// then writes out/ablation.csv.
std::vector<AblationResult> ablate(const RunConfig& base, const std::vector<AblationRow>& rows);

}  // namespace voin::train
