#include "voin/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "voin/core/error.hpp"
#include "voin/core/rng.hpp"
#include "voin/flow/flow_loss.hpp"
#include "voin/nn/checkpoint.hpp"
#include "voin/nn/convert.hpp"
#include "voin/train/losses.hpp"
#include "voin/train/pipeline.hpp"

namespace voin::train {

namespace fs = std::filesystem;
using namespace voin::nn;

namespace {

enum Stream : std::uint64_t { kShape = 1, kFlow = 2, kGen = 3, kAdv = 4, kOrder = 5 };

Var zero() { return constant(Tensor::scalar(0.0)); }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct Forward {
    Var shape_loss;
    Var flow_loss;
    Var content;
    Var final_clip;  // composite, T×3×H×W
};

}  // namespace

Models::Models(const RunConfig& r)
    : shape(r.shape, derive_seed(r.seed, kShape)),
      flow(r.flow, derive_seed(r.seed, kFlow)),
      gen(r.gen, derive_seed(r.seed, kGen)),
      adv(r.adv, derive_seed(r.seed, kAdv)) {}

std::vector<Var> Models::generator_side(bool flow_guidance) const {
    std::vector<Var> out = shape.params().vars();
    if (flow_guidance) {
        const auto f = flow.params().vars();
        out.insert(out.end(), f.begin(), f.end());
    }
    const auto g = gen.params().vars();
    out.insert(out.end(), g.begin(), g.end());
    return out;
}

Trainer::Trainer(const RunConfig& config, std::vector<SampleTensors> data)
    : config_(config.resolved()), data_(std::move(data)) {
    config_.validate();
    if (data_.empty()) throw TrainingError("no training samples");
    for (const auto& s : data_) {
        if (s.object_class() < 0 || s.object_class() >= config_.classes) {
            throw TrainingError(s.id + ": class " + std::to_string(s.object_class()) + " outside [0, " +
                                std::to_string(config_.classes) + ")");
        }
        config_.shape.validate_frame(s.sample.clip.height(), s.sample.clip.width());
    }
    models_ = std::make_unique<Models>(config_);
    const AdamConfig adam{config_.lr, config_.beta1, config_.beta2};
    gen_opt_ = Adam(models_->generator_side(config_.toggles.flow_guidance), adam);
    disc_opt_ = Adam(models_->adv.params().vars(), adam);
}

std::vector<std::size_t> Trainer::next_batch() {
    std::vector<std::size_t> batch;
    while (static_cast<int>(batch.size()) < config_.batch_size) {
        if (cursor_ == order_.size()) {
            order_.resize(data_.size());
            for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
            Rng rng(derive_seed(derive_seed(config_.seed, kOrder), static_cast<std::uint64_t>(epoch_++)));
            for (std::size_t i = order_.size(); i > 1; --i) {
                std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
            }
            cursor_ = 0;
        }
        batch.push_back(order_[cursor_++]);
    }
    return batch;
}

StepLosses Trainer::step() {
    const RunConfig& c = config_;
    Models& m = *models_;
    const auto batch = next_batch();
    const double scale = 1.0 / static_cast<double>(batch.size());
    const bool adversarial = (c.toggles.patch || c.toggles.multiclass) && step_ >= static_cast<int>(std::ceil(c.warmup * c.steps));

    std::vector<Forward> fwd;
    for (std::size_t idx : batch) {
        const SampleTensors& s = data_[idx];
        const std::int64_t T = s.length();
        Forward f;
        const Var vis = constant(s.visible), amo = constant(s.amodal), occ = constant(s.occluded);
        const Var shape_logits = m.shape.logits(constant(s.clip), vis, s.object_class());
        f.shape_loss = shape::shape_loss_logits(shape_logits, amo, occ, vis, c.hp.lambda1);

        Tensor frames = s.clip;
        Tensor hole = s.occluded;
        if (c.toggles.flow_guidance) {
            const flow::FlowCondition cond =
                flow::make_condition(s.clip, corrupted_flow(s.flow_fwd, s.occluded, FlowDirection::forward),
                                     corrupted_flow(s.flow_bwd, s.occluded, FlowDirection::backward), s.visible,
                                     s.amodal);
            const Var pred = m.flow.forward(cond);
            const Var gt_flow = concat({constant(s.flow_fwd), constant(s.flow_bwd)}, 0);
            const Var gt_clip = constant(s.gt);
            const Var head = slice(gt_clip, 0, 0, T - 1), tail = slice(gt_clip, 0, 1, T - 1);
            f.flow_loss = flow::flow_loss(pred, gt_flow, concat({head, tail}, 0), concat({tail, head}, 0), cond.amodal,
                                          cond.contour, c.hp)
                              .total;
            const auto [pf, pb] = split_flows(pred.value());
            const Propagated p = propagate_clip(s.sample.clip, s.sample.occluded, pf, pb, s.sample.amodal,
                                                c.hp.cycle_threshold, c.max_sweeps);
            frames = clip_tensor(p.frames);
            hole = mask_tensor(p.hole);
        } else {
            f.flow_loss = zero();
        }
        const Var generated = m.gen.forward(constant(frames), hole, s.amodal, s.occluded);
        f.content = content_loss(generated, constant(s.gt), amo, c.hp.lambda5);
        f.final_clip = generator::composite(generated, constant(frames), hole);
        fwd.push_back(f);
    }

    StepLosses out;
    out.step = step_;
    out.adversarial = adversarial;
    if (adversarial) {
        disc_opt_.zero_grad();
        Var d_total = zero();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const SampleTensors& s = data_[batch[i]];
            d_total = d_total + adversary::discriminator_loss(m.adv, constant(s.gt), fwd[i].final_clip, s.object_class()).total;
        }
        d_total = d_total * scale;
        out.disc = d_total.item();
        if (!std::isfinite(out.disc)) throw TrainingError("non-finite discriminator loss at step " + std::to_string(step_));
        d_total.backward();
        disc_opt_.step();
        m.adv.power_iteration();
    }

    gen_opt_.zero_grad();
    Var total = zero();
    double shape_sum = 0, flow_sum = 0, content_sum = 0, adv_sum = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const SampleTensors& s = data_[batch[i]];
        const Var gen_adv = adversarial ? adversary::generator_adversarial_loss(m.adv, fwd[i].final_clip, s.object_class()).total
                                        : zero();
        const Var app = appearance_loss({constant(Tensor::scalar(out.disc)), gen_adv, fwd[i].content}, c.hp.lambda6);
        total = total + total_loss({fwd[i].shape_loss, fwd[i].flow_loss, app}, c.hp);
        shape_sum += fwd[i].shape_loss.item();
        flow_sum += fwd[i].flow_loss.item();
        content_sum += fwd[i].content.item();
        adv_sum += gen_adv.item();
    }
    total = total * scale;
    out.shape = shape_sum * scale;
    out.flow = flow_sum * scale;
    out.content = content_sum * scale;
    out.gen_adv = adv_sum * scale;
    out.total = total.item();
    if (!std::isfinite(out.total)) {
        throw TrainingError("non-finite loss at step " + std::to_string(step_) + ": shape=" + fmt(out.shape) +
                            " flow=" + fmt(out.flow) + " content=" + fmt(out.content) + " gen_adv=" + fmt(out.gen_adv) +
                            " disc=" + fmt(out.disc));
    }
    // The discriminator term is a constant here; the adversary graph is not touched.
    total.backward();
    gen_opt_.step();
    ++step_;
    return out;
}

std::vector<StepLosses> Trainer::train(const std::function<void(const StepLosses&)>& on_step) {
    std::vector<StepLosses> rows;
    while (step_ < config_.steps) {
        rows.push_back(step());
        if (on_step) on_step(rows.back());
    }
    if (!config_.out.empty()) {
        fs::create_directories(config_.out);
        write_losses_csv(config_.out / "losses.csv", rows);
        save_checkpoints(config_.out);
    }
    return rows;
}

FlatConfig adversary_meta(const adversary::AdversaryConfig& cfg) {
    FlatConfig m;
    m.set("model", "adversary");
    m.set("classes", std::to_string(cfg.classes));
    m.set("patch", cfg.patch ? "1" : "0");
    m.set("multiclass", cfg.multiclass ? "1" : "0");
    m.set("attention", cfg.attention ? "1" : "0");
    return m;
}

void Trainer::save_checkpoints(const fs::path& dir) const {
    fs::create_directories(dir);
    auto with_step = [&](FlatConfig meta) {
        meta.set("step", std::to_string(step_));
        meta.set("seed", std::to_string(config_.seed));
        return meta;
    };
    const Models& m = *models_;
    save_checkpoint(dir / "shape.ckpt", m.shape.params(), with_step(m.shape.config().to_meta()));
    if (config_.toggles.flow_guidance) {
        save_checkpoint(dir / "flow.ckpt", m.flow.params(), with_step(m.flow.config().to_meta()));
    }
    save_checkpoint(dir / "generator.ckpt", m.gen.params(), with_step(m.gen.config().to_meta()));
    if (config_.toggles.patch || config_.toggles.multiclass) {
        save_checkpoint(dir / "adversary.ckpt", m.adv.params(), with_step(adversary_meta(m.adv.config())));
    }
}

void write_losses_csv(const fs::path& path, const std::vector<StepLosses>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "step,shape,flow,content,gen_adv,disc,total\n";
    for (const auto& r : rows) {
        out << r.step << ',' << fmt(r.shape) << ',' << fmt(r.flow) << ',' << fmt(r.content) << ',' << fmt(r.gen_adv)
            << ',' << fmt(r.disc) << ',' << fmt(r.total) << '\n';
    }
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace voin::train
