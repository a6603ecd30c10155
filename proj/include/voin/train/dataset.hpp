#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voin/core/sample.hpp"
#include "voin/nn/tensor.hpp"

namespace voin::train {

using nn::Tensor;

/// A sample with its tensor views. Requires the ground-truth clip.
struct SampleTensors {
    std::string id;
    double degree = 0.0;
    Sample sample;
    Tensor clip;      // T×3×H×W corrupted
    Tensor gt;        // T×3×H×W
    Tensor visible;   // T×1×H×W
    Tensor amodal;
    Tensor occluded;
    Tensor flow_fwd;  // (T-1)×2×H×W
    Tensor flow_bwd;

    int object_class() const { return sample.object_class; }
    int length() const { return sample.clip.length(); }
};

SampleTensors make_sample_tensors(Sample sample, std::string id, double degree);

/// Samples listed in `index.csv`, in index order; without an index, every
/// subdirectory holding a `clip/` folder, sorted by name.
std::vector<SampleTensors> load_dataset(const std::filesystem::path& dir);

}  // namespace voin::train
