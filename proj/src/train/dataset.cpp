#include "voin/train/dataset.hpp"

#include <algorithm>

#include "voin/core/error.hpp"
#include "voin/nn/convert.hpp"
#include "voin/synth/benchmark.hpp"

namespace voin::train {

namespace fs = std::filesystem;

SampleTensors make_sample_tensors(Sample sample, std::string id, double degree) {
    if (!sample.gt_clip) throw ValidationError(id + ": ground-truth clip required");
    SampleTensors s;
    s.id = std::move(id);
    s.degree = degree;
    s.clip = nn::clip_tensor(sample.clip);
    s.gt = nn::clip_tensor(*sample.gt_clip);
    s.visible = nn::mask_tensor(sample.visible);
    s.amodal = nn::mask_tensor(sample.amodal);
    s.occluded = nn::mask_tensor(sample.occluded);
    s.flow_fwd = nn::flow_tensor(sample.flow_fwd);
    s.flow_bwd = nn::flow_tensor(sample.flow_bwd);
    s.sample = std::move(sample);
    return s;
}

std::vector<SampleTensors> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    std::vector<std::pair<std::string, double>> entries;
    if (fs::exists(dir / "index.csv")) {
        for (const auto& row : synth::read_index(dir / "index.csv")) entries.emplace_back(row.sample_id, row.mean_degree);
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_directory() && fs::is_directory(e.path() / "clip")) entries.emplace_back(e.path().filename().string(), -1.0);
        }
        std::sort(entries.begin(), entries.end());
    }
    if (entries.empty()) throw IoError("dataset is empty: " + dir.string());
    std::vector<SampleTensors> out;
    for (const auto& [id, degree] : entries) {
        Sample s = load_sample(dir / id);
        double d = degree;
        if (d < 0) {
            double total = 0;
            for (int t = 0; t < s.amodal.length(); ++t) total += synth::occlusion_degree(s.occluded.masks[t], s.amodal.masks[t]);
            d = total / s.amodal.length();
        }
        out.push_back(make_sample_tensors(std::move(s), id, d));
    }
    return out;
}

}  // namespace voin::train
