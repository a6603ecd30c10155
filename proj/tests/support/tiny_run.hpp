#pragma once

#include <vector>

#include "voin/synth/benchmark.hpp"
#include "voin/train/dataset.hpp"
#include "voin/train/run_config.hpp"

namespace voin::testing {

/// Narrow networks that train a step in well under a second on 16×16 clips.
inline train::RunConfig tiny_run_config(int steps = 10, std::uint64_t seed = 0) {
    train::RunConfig c;
    c.seed = seed;
    c.steps = steps;
    c.classes = 2;
    c.lr = 1e-3;
    c.shape.channels = 8;
    c.shape.layers = 1;
    c.shape.patch_scales = {1, 2};
    c.shape.key_dim = 4;
    c.shape.embed_dim = 4;
    c.flow.widths = {4, 6, 8};
    c.gen.widths = {6, 8};
    c.adv.patch_widths = {4, 6, 6};
    c.adv.class_widths = {4, 4, 6, 6, 6, 6};
    c.grids = false;
    return c;
}

/// `count` synthetic 16×16 clips of `length` frames, classes alternating over {0, 1}.
inline std::vector<train::SampleTensors> tiny_dataset(int count, int length = 3, std::uint64_t seed = 11,
                                                      double degree = 0.3) {
    synth::SynthConfig sc;
    sc.height = 16;
    sc.width = 16;
    sc.length = length;
    sc.classes = 2;
    sc.max_speed = 1;
    std::vector<train::SampleTensors> out;
    for (int i = 0; i < count; ++i) {
        auto s = synth::synth_one(sc, seed + 17 * static_cast<std::uint64_t>(i), i % 2, degree);
        const double d = s.mean_degree();
        out.push_back(train::make_sample_tensors(std::move(s.sample), "s" + std::to_string(i), d));
    }
    return out;
}

}  // namespace voin::testing
