#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voin/adversary/adversary.hpp"
#include "voin/core/config.hpp"
#include "voin/flow/flow_net.hpp"
#include "voin/generator/generator.hpp"
#include "voin/shape/shape_net.hpp"

namespace voin::train {

/// Component switches of the ablation table.
struct Toggles {
    bool occlusion_gate = true;  // OG: mask fusion term in every generator gate
    bool patch = true;           // TP: patch discriminator
    bool multiclass = true;      // MD: class discriminator
    bool attention = true;       // STAM inside the class discriminator
    bool flow_guidance = true;   // F: flow completion and propagation before inpainting

    /// MD off forces STAM off.
    Toggles normalized() const;
};

struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path out;
    std::uint64_t seed = 0;
    int steps = 100;
    int batch_size = 1;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double warmup = 0.2;  // fraction of steps without adversarial terms
    int log_every = 0;    // 0 = silent
    int classes = 4;
    int max_sweeps = 8;
    bool oracle = false;  // eval: ground-truth masks and flow
    bool grids = true;    // eval: write comparison images

    HyperParams hp;
    Toggles toggles;
    shape::ShapeNetConfig shape;
    flow::FlowNetConfig flow;
    generator::GeneratorConfig gen;
    adversary::AdversaryConfig adv;

    static const std::vector<std::string>& keys();
    /// Unknown keys are ConfigErrors. Relative paths resolve against `base`.
    static RunConfig from_config(const FlatConfig& cfg, const std::filesystem::path& base = {});
    static RunConfig load(const std::filesystem::path& path);
    /// Applies ablation toggles and class count to the module configs.
    RunConfig resolved() const;
    void validate() const;
};

}  // namespace voin::train
