#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "voin/core/error.hpp"
#include "voin/core/io.hpp"
#include "voin/core/sample.hpp"
#include "voin/flow/flow_net.hpp"
#include "voin/generator/generator.hpp"
#include "voin/nn/checkpoint.hpp"
#include "voin/nn/convert.hpp"
#include "voin/synth/benchmark.hpp"
#include "voin/train/evaluate.hpp"
#include "voin/train/pipeline.hpp"
#include "voin/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace voin;

namespace {

struct SynthArgs {
    fs::path config, out;
    std::optional<int> num;
    std::optional<std::uint64_t> seed;
    std::optional<double> degree_min, degree_max;
    std::optional<int> threads;
};

int run_synth(const SynthArgs& a) {
    synth::SynthConfig cfg = a.config.empty() ? synth::SynthConfig{} : synth::SynthConfig::from_config(FlatConfig::load(a.config));
    if (a.num) cfg.num = *a.num;
    if (a.seed) cfg.seed = *a.seed;
    if (a.degree_min) cfg.degree_min = *a.degree_min;
    if (a.degree_max) cfg.degree_max = *a.degree_max;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();
    const auto report = synth::synth_dataset(cfg, a.out);
    for (const auto& f : report.failures) std::cerr << "retried: " << f << '\n';
    std::cout << "wrote " << report.rows.size() << " samples to " << a.out.string() << '\n';
    return 0;
}

int run_flow_complete(const fs::path& sample_dir, const fs::path& ckpt_path, const fs::path& out) {
    const Sample s = load_sample(sample_dir);
    const nn::Checkpoint ckpt = nn::read_checkpoint(ckpt_path);
    flow::FlowNet net(flow::FlowNetConfig::from_meta(ckpt.meta), 0);
    nn::load_into(net.params(), ckpt);
    const nn::Tensor occ = nn::mask_tensor(s.occluded);
    const flow::FlowCondition cond = flow::make_condition(
        nn::clip_tensor(s.clip), train::corrupted_flow(nn::flow_tensor(s.flow_fwd), occ, FlowDirection::forward),
        train::corrupted_flow(nn::flow_tensor(s.flow_bwd), occ, FlowDirection::backward), nn::mask_tensor(s.visible),
        nn::mask_tensor(s.amodal));
    nn::NoGradGuard guard;
    const auto [fwd, bwd] = train::split_flows(net.forward(cond).value());
    save_flow_sequence(fwd, out / "flow_fwd");
    save_flow_sequence(bwd, out / "flow_bwd");
    std::cout << "wrote " << fwd.length() << " forward and " << bwd.length() << " backward flows to " << out.string()
              << '\n';
    return 0;
}

int run_propagate(const fs::path& sample_dir, const fs::path& flow_dir, double tau, int sweeps, const fs::path& out) {
    const Sample s = load_sample(sample_dir);
    const FlowSequence fwd = load_flow_sequence(flow_dir / "flow_fwd", FlowDirection::forward);
    const FlowSequence bwd = load_flow_sequence(flow_dir / "flow_bwd", FlowDirection::backward);
    const train::Propagated p = train::propagate_clip(s.clip, s.occluded, fwd, bwd, s.amodal, tau, sweeps);
    save_clip(quantized(p.frames), out / "clip");
    save_masks(p.hole, out / "masks_hole");
    save_masks(s.visible, out / "masks_visible");
    save_masks(s.amodal, out / "masks_amodal");
    save_masks(s.occluded, out / "masks_occ");
    std::size_t holes = 0;
    for (const auto& r : p.hole.masks) holes += r.count();
    std::cout << "filled " << p.filled << " pixels, " << holes << " hole pixels remain\n";
    return 0;
}

int run_inpaint(const fs::path& sample_dir, const fs::path& ckpt_path, const fs::path& out) {
    const VideoClip clip = load_clip(sample_dir / "clip");
    const MaskSequence amodal = load_masks(sample_dir / "masks_amodal", MaskKind::amodal);
    const MaskSequence occ = load_masks(sample_dir / "masks_occ", MaskKind::occluded);
    const bool has_hole = fs::is_directory(sample_dir / "masks_hole");
    const MaskSequence hole = has_hole ? load_masks(sample_dir / "masks_hole", MaskKind::hole) : occ;
    if (hole.length() != clip.length() || amodal.length() != clip.length() || occ.length() != clip.length()) {
        throw ShapeError("inpaint: mask and clip lengths differ");
    }
    const nn::Checkpoint ckpt = nn::read_checkpoint(ckpt_path);
    generator::Generator gen(generator::GeneratorConfig::from_meta(ckpt.meta), 0);
    nn::load_into(gen.params(), ckpt);
    nn::NoGradGuard guard;
    const nn::Tensor h = nn::mask_tensor(hole);
    const nn::Var frames = nn::constant(nn::clip_tensor(clip));
    const nn::Var y = generator::composite(gen.forward(frames, h, nn::mask_tensor(amodal), nn::mask_tensor(occ)), frames, h);
    save_clip(quantized(nn::tensor_clip(y.value())), out / "clip");
    std::cout << "inpainted " << clip.length() << " frames using " << (has_hole ? "masks_hole" : "masks_occ") << '\n';
    return 0;
}

train::RunConfig load_run(const fs::path& config, const std::optional<fs::path>& out,
                          const std::optional<fs::path>& data) {
    train::RunConfig cfg = train::RunConfig::load(config);
    if (out) cfg.out = *out;
    if (data) cfg.data = *data;
    if (cfg.data.empty()) throw ConfigError("no dataset: set 'data' in the config or pass --data");
    return cfg;
}

int run_train(train::RunConfig cfg, std::optional<int> steps) {
    if (steps) cfg.steps = *steps;
    if (cfg.out.empty()) throw ConfigError("no output directory: set 'out' in the config or pass --out");
    train::Trainer trainer(cfg, train::load_dataset(cfg.data));
    const int every = cfg.log_every;
    trainer.train([every](const train::StepLosses& l) {
        if (every > 0 && (l.step + 1) % every == 0) {
            std::printf("step %d total %.6f shape %.6f flow %.6f content %.6f gen_adv %.6f disc %.6f\n", l.step + 1,
                        l.total, l.shape, l.flow, l.content, l.gen_adv, l.disc);
        }
    });
    std::cout << "trained " << trainer.steps_done() << " steps; checkpoints in " << cfg.out.string() << '\n';
    return 0;
}

void print_report(const train::MetricsReport& r) {
    std::printf("samples %zu  psnr_occ %.4f  ssim %.4f  epe_occ %.4f  miou %.4f\n", r.rows.size(), r.psnr_occ, r.ssim,
                r.epe_occ, r.miou);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occlusion-aware video object inpainting toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic occlusion benchmark");
    synth->add_option("--config", synth_args.config, "Flat key = value config")->check(CLI::ExistingFile);
    synth->add_option("--out", synth_args.out, "Output directory")->required();
    synth->add_option("--num", synth_args.num, "Number of samples");
    synth->add_option("--seed", synth_args.seed, "Base seed");
    synth->add_option("--degree-min", synth_args.degree_min, "Lowest occlusion degree");
    synth->add_option("--degree-max", synth_args.degree_max, "Highest occlusion degree");
    synth->add_option("--threads", synth_args.threads, "Worker threads (0 = hardware)");

    fs::path sample_dir, ckpt_path, out_dir, flow_dir;
    auto* fc = app.add_subcommand("flow-complete", "Complete the object flow of one sample");
    fc->add_option("--sample", sample_dir)->required()->check(CLI::ExistingDirectory);
    fc->add_option("--ckpt", ckpt_path)->required()->check(CLI::ExistingFile);
    fc->add_option("--out", out_dir)->required();

    double tau = 5.0;
    int sweeps = 8;
    auto* prop = app.add_subcommand("propagate", "Fill occluded pixels along completed flow");
    prop->add_option("--sample", sample_dir)->required()->check(CLI::ExistingDirectory);
    prop->add_option("--flow", flow_dir, "Directory with flow_fwd/ and flow_bwd/")->required()->check(CLI::ExistingDirectory);
    prop->add_option("--tau", tau, "Cycle-consistency threshold in pixels")->capture_default_str();
    prop->add_option("--max-sweeps", sweeps, "Sweep limit")->capture_default_str();
    prop->add_option("--out", out_dir)->required();

    auto* inpaint = app.add_subcommand("inpaint", "Inpaint remaining holes with a generator checkpoint");
    inpaint->add_option("--sample", sample_dir)->required()->check(CLI::ExistingDirectory);
    inpaint->add_option("--ckpt", ckpt_path)->required()->check(CLI::ExistingFile);
    inpaint->add_option("--out", out_dir)->required();

    fs::path config_path;
    std::optional<fs::path> out_override, data_override;
    std::optional<int> steps;
    auto* train_cmd = app.add_subcommand("train", "Train all modules jointly");
    train_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out", out_override, "Overrides 'out'");
    train_cmd->add_option("--data", data_override, "Overrides 'data'");
    train_cmd->add_option("--steps", steps, "Overrides 'steps'");

    fs::path ckpt_dir;
    bool oracle = false;
    auto* eval = app.add_subcommand("eval", "Run the full pipeline and write reports");
    eval->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    eval->add_option("--ckpt-dir", ckpt_dir, "Directory with shape.ckpt, flow.ckpt, generator.ckpt");
    eval->add_option("--out", out_override, "Overrides 'out'");
    eval->add_option("--data", data_override, "Overrides 'data'");
    eval->add_flag("--oracle", oracle, "Use ground-truth masks and flow");

    fs::path matrix_path;
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate each row of a toggle matrix");
    ablate->add_option("--matrix", matrix_path)->required()->check(CLI::ExistingFile);
    ablate->add_option("--out", out_override, "Overrides 'out'");
    ablate->add_option("--data", data_override, "Overrides 'data'");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return run_synth(synth_args);
        if (*fc) return run_flow_complete(sample_dir, ckpt_path, out_dir);
        if (*prop) return run_propagate(sample_dir, flow_dir, tau, sweeps, out_dir);
        if (*inpaint) return run_inpaint(sample_dir, ckpt_path, out_dir);
        if (*train_cmd) return run_train(load_run(config_path, out_override, data_override), steps);
        if (*eval) {
            train::RunConfig cfg = load_run(config_path, out_override, data_override);
            if (oracle) cfg.oracle = true;
            if (cfg.out.empty()) throw ConfigError("no output directory: set 'out' in the config or pass --out");
            print_report(train::evaluate(cfg, ckpt_dir));
            return 0;
        }
        if (*ablate) {
            const train::AblationMatrix m = train::AblationMatrix::load(matrix_path);
            train::RunConfig cfg = train::RunConfig::from_config(m.base, matrix_path.parent_path());
            if (out_override) cfg.out = *out_override;
            if (data_override) cfg.data = *data_override;
            if (cfg.data.empty() || cfg.out.empty()) throw ConfigError("ablate needs 'data' and 'out'");
            for (const auto& r : train::ablate(cfg, m.rows)) {
                std::printf("%-8s ", r.row.name.c_str());
                print_report(r.report);
            }
            return 0;
        }
    } catch (const voin::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
