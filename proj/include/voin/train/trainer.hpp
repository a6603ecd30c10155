#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "voin/nn/adam.hpp"
#include "voin/train/dataset.hpp"
#include "voin/train/run_config.hpp"

namespace voin::train {

/// All trainable modules of one run, each seeded from the run seed.
struct Models {
    explicit Models(const RunConfig& resolved);

    shape::ShapeNet shape;
    flow::FlowNet flow;
    generator::Generator gen;
    adversary::Adversary adv;

    /// Parameters updated by the generator-side step (flow excluded without F).
    std::vector<nn::Var> generator_side(bool flow_guidance) const;
};

struct StepLosses {
    int step = 0;
    double shape = 0;
    double flow = 0;
    double content = 0;
    double gen_adv = 0;
    double disc = 0;
    double total = 0;
    bool adversarial = false;
};

/// Alternating updates: a discriminator step on the hinge and class terms,
/// then one step of shape + λ_flow·flow + λ_app·(gen_adv + λ6·content) on the
/// shape, flow and generator parameters. Adversarial terms start after the warmup.
class Trainer {
public:
    Trainer(const RunConfig& config, std::vector<SampleTensors> data);

    StepLosses step();
    /// Runs the remaining configured steps, then writes losses.csv and checkpoints to the output dir.
    std::vector<StepLosses> train(const std::function<void(const StepLosses&)>& on_step = {});
    void save_checkpoints(const std::filesystem::path& dir) const;

    Models& models() { return *models_; }
    const RunConfig& config() const { return config_; }
    int steps_done() const { return step_; }

private:
    std::vector<std::size_t> next_batch();

    RunConfig config_;
    std::vector<SampleTensors> data_;
    std::unique_ptr<Models> models_;
    nn::Adam gen_opt_;
    nn::Adam disc_opt_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    int epoch_ = 0;
    int step_ = 0;
};

void write_losses_csv(const std::filesystem::path& path, const std::vector<StepLosses>& rows);

FlatConfig adversary_meta(const adversary::AdversaryConfig& cfg);

}  // namespace voin::train
