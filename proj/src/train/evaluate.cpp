#include "voin/train/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "voin/core/error.hpp"
#include "voin/core/io.hpp"
#include "voin/nn/checkpoint.hpp"
#include "voin/nn/convert.hpp"
#include "voin/train/metrics.hpp"
#include "voin/train/pipeline.hpp"
#include "voin/train/trainer.hpp"

namespace voin::train {

namespace fs = std::filesystem;
using namespace voin::nn;

namespace {

std::size_t count(const MaskSequence& m) {
    std::size_t n = 0;
    for (const auto& r : m.masks) n += r.count();
    return n;
}

std::string fixed(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

InferenceModels InferenceModels::load(const fs::path& dir) {
    InferenceModels m;
    if (fs::exists(dir / "shape.ckpt")) {
        const Checkpoint c = read_checkpoint(dir / "shape.ckpt");
        m.shape.emplace(shape::ShapeNetConfig::from_meta(c.meta), 0);
        load_into(m.shape->params(), c);
    }
    if (fs::exists(dir / "flow.ckpt")) {
        const Checkpoint c = read_checkpoint(dir / "flow.ckpt");
        m.flow.emplace(flow::FlowNetConfig::from_meta(c.meta), 0);
        load_into(m.flow->params(), c);
    }
    if (fs::exists(dir / "generator.ckpt")) {
        const Checkpoint c = read_checkpoint(dir / "generator.ckpt");
        m.gen.emplace(generator::GeneratorConfig::from_meta(c.meta), 0);
        load_into(m.gen->params(), c);
    }
    return m;
}

PipelineOutput run_pipeline(const SampleTensors& s, const InferenceModels& models, const RunConfig& config) {
    NoGradGuard no_grad;
    const Sample& smp = s.sample;
    const bool guided = config.oracle || config.toggles.flow_guidance;
    PipelineOutput out;

    if (config.oracle) {
        out.amodal = smp.amodal;
    } else {
        if (!models.shape) throw ConfigError("shape completion stage: no shape.ckpt checkpoint");
        const Var prob = models.shape->forward(constant(s.clip), constant(s.visible), s.object_class());
        out.amodal = mask_union(tensor_masks(prob.value(), MaskKind::amodal), smp.visible, MaskKind::amodal);
    }
    out.occluded = mask_difference(out.amodal, smp.visible, MaskKind::occluded);

    const Tensor init_fwd = corrupted_flow(s.flow_fwd, s.occluded, FlowDirection::forward);
    const Tensor init_bwd = corrupted_flow(s.flow_bwd, s.occluded, FlowDirection::backward);
    if (config.oracle) {
        out.flow_fwd = smp.flow_fwd;
        out.flow_bwd = smp.flow_bwd;
    } else if (guided) {
        if (!models.flow) throw ConfigError("flow completion stage: no flow.ckpt checkpoint");
        const flow::FlowCondition cond =
            flow::make_condition(s.clip, init_fwd, init_bwd, s.visible, mask_tensor(out.amodal));
        std::tie(out.flow_fwd, out.flow_bwd) = split_flows(models.flow->forward(cond).value());
    } else {
        out.flow_fwd = tensor_flows(init_fwd, FlowDirection::forward);
        out.flow_bwd = tensor_flows(init_bwd, FlowDirection::backward);
    }

    if (guided) {
        Propagated p = propagate_clip(smp.clip, out.occluded, out.flow_fwd, out.flow_bwd, out.amodal,
                                      config.hp.cycle_threshold, config.max_sweeps);
        out.propagated = std::move(p.frames);
        out.hole = std::move(p.hole);
        out.filled = p.filled;
    } else {
        out.propagated = smp.clip;
        out.hole = MaskSequence{out.occluded.masks, MaskKind::hole};
    }

    VideoClip final_clip = out.propagated;
    if (count(out.hole) > 0) {
        if (!models.gen) throw ConfigError("inpainting stage: holes remain but there is no generator.ckpt checkpoint");
        const Tensor hole = mask_tensor(out.hole);
        const Var prop = constant(clip_tensor(out.propagated));
        const Var gen = models.gen->forward(prop, hole, mask_tensor(out.amodal), mask_tensor(out.occluded));
        final_clip = tensor_clip(generator::composite(gen, prop, hole).value());
    }
    out.final_clip = quantized(final_clip);
    return out;
}

SampleReport score_sample(const SampleTensors& s, const PipelineOutput& out) {
    const Sample& smp = s.sample;
    SampleReport r;
    r.sample_id = s.id;
    r.degree = s.degree;
    r.object_class = s.object_class();
    r.psnr_occ = psnr(out.final_clip, *smp.gt_clip, &smp.occluded.masks);
    r.ssim = ssim(out.final_clip, *smp.gt_clip);
    std::vector<FlowField> pred = out.flow_fwd.flows, gt = smp.flow_fwd.flows;
    pred.insert(pred.end(), out.flow_bwd.flows.begin(), out.flow_bwd.flows.end());
    gt.insert(gt.end(), smp.flow_bwd.flows.begin(), smp.flow_bwd.flows.end());
    std::vector<Raster> region = flow_regions(smp.occluded, FlowDirection::forward);
    const auto back = flow_regions(smp.occluded, FlowDirection::backward);
    region.insert(region.end(), back.begin(), back.end());
    r.epe_occ = epe(pred, gt, &region);
    r.miou = miou(out.amodal.masks, smp.amodal.masks);
    return r;
}

Image comparison_grid(const VideoClip& gt, const VideoClip& corrupted, const VideoClip& propagated,
                      const VideoClip& final_clip) {
    const int T = gt.length(), H = gt.height(), W = gt.width();
    const VideoClip* cols[4] = {&gt, &corrupted, &propagated, &final_clip};
    Image grid(T * H, 4 * W);
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < 4; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int ch = 0; ch < 3; ++ch) grid.at(t * H + y, c * W + x, ch) = cols[c]->frames[t].at(y, x, ch);
    return grid;
}

void write_report(const fs::path& dir, const MetricsReport& report) {
    fs::create_directories(dir);
    std::ofstream csv(dir / "report.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (dir / "report.csv").string());
    csv << "sample_id,psnr_occ,ssim,epe_occ,miou,degree,class\n";
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        csv << r.sample_id << ',' << fixed(r.psnr_occ) << ',' << fixed(r.ssim) << ',' << fixed(r.epe_occ) << ','
            << fixed(r.miou) << ',' << fixed(r.degree) << ',' << r.object_class << '\n';
        samples.push_back({{"sample_id", r.sample_id},
                           {"psnr_occ", r.psnr_occ},
                           {"ssim", r.ssim},
                           {"epe_occ", r.epe_occ},
                           {"miou", r.miou},
                           {"degree", r.degree},
                           {"class", r.object_class}});
    }
    nlohmann::ordered_json j;
    j["count"] = report.rows.size();
    j["aggregate"] = {{"psnr_occ", report.psnr_occ},
                      {"ssim", report.ssim},
                      {"epe_occ", report.epe_occ},
                      {"miou", report.miou}};
    j["propagation"] = {{"occluded_pixels", report.occluded},
                        {"filled_pixels", report.filled},
                        {"hole_pixels", report.holes_left}};
    j["samples"] = samples;
    std::ofstream js(dir / "report.json", std::ios::trunc);
    if (!js) throw IoError("cannot write " + (dir / "report.json").string());
    js << j.dump(2) << '\n';
}

MetricsReport evaluate(const RunConfig& config, const InferenceModels& models, const std::vector<SampleTensors>& data) {
    const RunConfig c = config.resolved();
    MetricsReport report;
    for (const auto& s : data) {
        const PipelineOutput out = run_pipeline(s, models, c);
        report.rows.push_back(score_sample(s, out));
        report.filled += out.filled;
        report.occluded += count(s.sample.occluded);
        report.holes_left += count(out.hole);
        if (!c.out.empty()) {
            const fs::path dir = c.out / "samples" / s.id;
            save_clip(out.final_clip, dir / "clip");
            save_clip(quantized(out.propagated), dir / "propagated");
            save_masks(out.amodal, dir / "masks_amodal");
            save_masks(out.hole, dir / "masks_hole");
            save_flow_sequence(out.flow_fwd, dir / "flow_fwd");
            save_flow_sequence(out.flow_bwd, dir / "flow_bwd");
            if (c.grids) {
                fs::create_directories(c.out / "grids");
                write_ppm(comparison_grid(*s.sample.gt_clip, s.sample.clip, out.propagated, out.final_clip),
                          c.out / "grids" / (s.id + ".ppm"));
            }
        }
    }
    const double n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
        report.psnr_occ += r.psnr_occ / n;
        report.ssim += r.ssim / n;
        report.epe_occ += r.epe_occ / n;
        report.miou += r.miou / n;
    }
    if (!c.out.empty()) write_report(c.out, report);
    return report;
}

MetricsReport evaluate(const RunConfig& config, const fs::path& ckpt_dir) {
    const InferenceModels models = ckpt_dir.empty() ? InferenceModels{} : InferenceModels::load(ckpt_dir);
    return evaluate(config, models, load_dataset(config.data));
}

AblationMatrix AblationMatrix::parse(const std::string& text) {
    AblationMatrix m;
    std::string base_text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    const std::regex toggle(R"(^(OG|TP|MD|STAM|F)=([01])$)");
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream words(line);
        std::string first;
        if (!(words >> first) || first[0] == '#') continue;
        if (first != "row") {
            base_text += line + '\n';
            continue;
        }
        AblationRow row;
        if (!(words >> row.name)) throw ConfigError("matrix line " + std::to_string(lineno) + ": row needs a name");
        std::string tok;
        while (words >> tok) {
            std::smatch sm;
            if (!std::regex_match(tok, sm, toggle)) {
                throw ConfigError("matrix line " + std::to_string(lineno) + ": bad toggle '" + tok + "'");
            }
            const bool on = sm[2] == "1";
            const std::string key = sm[1];
            if (key == "OG") row.toggles.occlusion_gate = on;
            else if (key == "TP") row.toggles.patch = on;
            else if (key == "MD") row.toggles.multiclass = on;
            else if (key == "STAM") row.toggles.attention = on;
            else row.toggles.flow_guidance = on;
        }
        for (const auto& r : m.rows)
            if (r.name == row.name) throw ConfigError("matrix: duplicate row '" + row.name + "'");
        m.rows.push_back(row);
    }
    m.base = FlatConfig::parse(base_text);
    if (m.rows.empty()) throw ConfigError("matrix has no rows");
    return m;
}

AblationMatrix AblationMatrix::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::vector<AblationRow> AblationMatrix::standard_rows() {
    std::vector<AblationRow> rows;
    Toggles t{false, false, false, false, false};
    rows.push_back({"B_I", t});
    t.occlusion_gate = true;
    rows.push_back({"+OG", t});
    t.patch = true;
    rows.push_back({"+TP", t});
    t.multiclass = true;
    rows.push_back({"+MD", t});
    t.attention = true;
    rows.push_back({"+STAM", t});
    t.flow_guidance = true;
    rows.push_back({"+F", t});
    return rows;
}

std::vector<AblationResult> ablate(const RunConfig& base, const std::vector<AblationRow>& rows) {
    const auto data = load_dataset(base.data);
    std::vector<AblationResult> results;
    for (const auto& row : rows) {
        RunConfig cfg = base;
        cfg.toggles = row.toggles;
        cfg.out = base.out.empty() ? fs::path{} : base.out / row.name;
        Trainer trainer(cfg, data);
        trainer.train();
        AblationResult r;
        r.row = {row.name, trainer.config().toggles};
        const Models& m = trainer.models();
        r.flow_params = trainer.config().toggles.flow_guidance ? m.flow.params().total_size() : 0;
        r.generator_params = m.gen.params().total_size();
        r.adversary_params = m.adv.params().total_size();
        InferenceModels inf;
        inf.shape.emplace(m.shape);
        if (trainer.config().toggles.flow_guidance) inf.flow.emplace(m.flow);
        inf.gen.emplace(m.gen);
        RunConfig eval_cfg = trainer.config();
        eval_cfg.oracle = false;
        if (!eval_cfg.out.empty()) eval_cfg.out /= "eval";
        r.report = evaluate(eval_cfg, inf, data);
        results.push_back(std::move(r));
    }
    if (!base.out.empty()) {
        fs::create_directories(base.out);
        std::ofstream csv(base.out / "ablation.csv", std::ios::trunc);
        if (!csv) throw IoError("cannot write ablation.csv");
        csv << "row,OG,TP,MD,STAM,F,flow_params,generator_params,adversary_params,psnr_occ,ssim,epe_occ,miou\n";
        for (const auto& r : results) {
            const Toggles& t = r.row.toggles;
            csv << r.row.name << ',' << t.occlusion_gate << ',' << t.patch << ',' << t.multiclass << ',' << t.attention
                << ',' << t.flow_guidance << ',' << r.flow_params << ',' << r.generator_params << ','
                << r.adversary_params << ',' << fixed(r.report.psnr_occ) << ',' << fixed(r.report.ssim) << ','
                << fixed(r.report.epe_occ) << ',' << fixed(r.report.miou) << '\n';
        }
    }
    return results;
}

}  // namespace voin::train
