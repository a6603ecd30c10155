#include <doctest.h>

#include <cmath>
#include <set>

#include "gradcheck.hpp"
#include "metric_oracles.hpp"
#include "tempdir.hpp"
#include "tiny_run.hpp"
#include "voin/core/error.hpp"
#include "voin/core/io.hpp"
#include "voin/core/rng.hpp"
#include "voin/nn/checkpoint.hpp"
#include "voin/train/evaluate.hpp"
#include "voin/train/losses.hpp"
#include "voin/train/metrics.hpp"
#include "voin/train/pipeline.hpp"
#include "voin/train/trainer.hpp"

using namespace voin;
using namespace voin::nn;
using namespace voin::train;
using voin::testing::check_gradient;
using voin::testing::TempDir;
using voin::testing::tiny_dataset;
using voin::testing::tiny_run_config;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor t(shape);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

VideoClip uniform_clip(int T, int H, int W, float v) {
    VideoClip c;
    for (int t = 0; t < T; ++t) c.frames.emplace_back(H, W, v);
    return c;
}

VideoClip random_clip(int T, int H, int W, Rng& rng) {
    VideoClip c;
    for (int t = 0; t < T; ++t) {
        Image img(H, W);
        for (auto& v : img.data) v = static_cast<float>(rng.uniform());
        c.frames.push_back(img);
    }
    return c;
}

std::vector<Raster> random_masks(int T, int H, int W, Rng& rng, double p = 0.4) {
    std::vector<Raster> out;
    for (int t = 0; t < T; ++t) {
        Raster r(H, W);
        for (auto& v : r.data) v = rng.uniform() < p ? 1 : 0;
        out.push_back(r);
    }
    return out;
}

}  // namespace

// ---- losses ----

TEST_CASE("content loss: zero on identical inputs, mean L1 when lambda5 = 1") {
    const Var y(random_tensor({2, 3, 4, 4}, 1), true);
    const Var gt(random_tensor({2, 3, 4, 4}, 2));
    const Var mask(random_tensor({2, 1, 4, 4}, 3));
    CHECK(content_loss(gt, gt, mask, 0.7).item() == 0.0);
    CHECK(content_loss(y, gt, mask, 1.0).item() == doctest::Approx(mean(abs(y - gt)).item()).epsilon(1e-12));
}

TEST_CASE("content loss: 2x2 hand value") {
    // One frame, one channel shown per pixel after broadcast: diffs 0.2 everywhere.
    const Var y(Tensor({1, 3, 2, 2}, 0.2));
    const Var gt(Tensor({1, 3, 2, 2}, 0.0));
    const Var mask(Tensor({1, 1, 2, 2}, std::vector<double>{1, 0, 0, 1}));
    // (6·0.2 + 0.5·6·0.2) / 12 = 0.15
    CHECK(content_loss(y, gt, mask, 0.5).item() == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("content loss: gradient") {
    const Var y(random_tensor({2, 3, 3, 3}, 4), true);
    const Var gt(random_tensor({2, 3, 3, 3}, 5));
    const Var mask(random_tensor({2, 1, 3, 3}, 6));
    const auto r = check_gradient(y, [&] { return content_loss(y, gt, mask, 0.3); }, 1e-6, 54, 1);
    CHECK(r.max_rel < 1e-5);
}

TEST_CASE("appearance and total losses compose linearly") {
    HyperParams hp;
    hp.lambda_flow = 2.0;
    hp.lambda_app = 0.25;
    const Var d = constant(Tensor::scalar(0.3)), g = constant(Tensor::scalar(-0.4)), c = constant(Tensor::scalar(0.05));
    const Var app = appearance_loss({d, g, c}, 10.0);
    CHECK(app.item() == doctest::Approx(0.3 - 0.4 + 0.5));
    const Var tot = total_loss({constant(Tensor::scalar(1.5)), constant(Tensor::scalar(0.1)), app}, hp);
    CHECK(tot.item() == doctest::Approx(1.5 + 0.2 + 0.25 * 0.4));

    hp.lambda_flow = 0.0;
    hp.lambda_app = 0.0;
    CHECK(total_loss({constant(Tensor::scalar(1.5)), constant(Tensor::scalar(9.0)), app}, hp).item() == 1.5);
}

// ---- metrics ----

TEST_CASE("psnr: identical clips hit the cap, uniform error 0.1 gives 20 dB") {
    const auto a = uniform_clip(2, 4, 4, 0.5f);
    CHECK(psnr(a, a) == kPsnrCap);
    const auto b = uniform_clip(2, 4, 4, 0.4f);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
    const std::vector<Raster> empty(2, Raster(4, 4));
    CHECK(psnr(a, b, &empty) == kPsnrCap);
}

TEST_CASE("ssim: identical clips give 1, constants follow the luminance term") {
    Rng rng(3);
    const auto a = random_clip(2, 12, 12, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const auto c1 = uniform_clip(1, 12, 12, 0.2f), c2 = uniform_clip(1, 12, 12, 0.7f);
    const double x = static_cast<double>(0.2f), y = static_cast<double>(0.7f);
    const double expected = (2 * x * y + 1e-4) / (x * x + y * y + 1e-4);
    CHECK(ssim(c1, c2) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("epe and miou: hand values") {
    FlowField a(2, 2), b(2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            a.u(y, x) = 3;
            a.v(y, x) = 4;
        }
    CHECK(epe({a}, {b}) == doctest::Approx(5.0));
    const std::vector<Raster> none{Raster(2, 2)};
    CHECK(epe({a}, {b}, &none) == 0.0);

    Raster p(1, 4), q(1, 4);
    p.data = {1, 1, 0, 0};
    q.data = {0, 1, 1, 0};
    CHECK(miou({p}, {q}) == doctest::Approx(100.0 / 3.0));
    CHECK(miou({Raster(2, 2)}, {Raster(2, 2)}) == 100.0);
}

TEST_CASE("metrics agree with independent implementations on random inputs") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int T = 2 + trial % 3, H = 8 + trial, W = 9 + 2 * trial;
        const auto a = random_clip(T, H, W, rng), b = random_clip(T, H, W, rng);
        const auto region = random_masks(T, H, W, rng);
        CHECK(psnr(a, b, &region) == doctest::Approx(voin::testing::psnr_oracle(a, b, &region)).epsilon(1e-9));
        CHECK(ssim(a, b) == doctest::Approx(voin::testing::ssim_oracle(a, b)).epsilon(1e-9));
        std::vector<FlowField> fa, fb;
        for (int t = 0; t < T; ++t) {
            FlowField x(H, W), y(H, W);
            for (auto& v : x.uv) v = static_cast<float>(rng.uniform(-3, 3));
            for (auto& v : y.uv) v = static_cast<float>(rng.uniform(-3, 3));
            fa.push_back(x);
            fb.push_back(y);
        }
        CHECK(epe(fa, fb, &region) == doctest::Approx(voin::testing::epe_oracle(fa, fb, &region)).epsilon(1e-9));
        const auto m1 = random_masks(T, H, W, rng), m2 = random_masks(T, H, W, rng);
        CHECK(miou(m1, m2) == doctest::Approx(voin::testing::miou_oracle(m1, m2)).epsilon(1e-12));
    }
}

TEST_CASE("flow regions: forward uses mask t, backward mask t+1") {
    MaskSequence m{{Raster(1, 1, 0), Raster(1, 1, 1), Raster(1, 1, 0)}, MaskKind::occluded};
    const auto f = flow_regions(m, FlowDirection::forward), b = flow_regions(m, FlowDirection::backward);
    REQUIRE(f.size() == 2);
    CHECK(f[0].data[0] == 0);
    CHECK(f[1].data[0] == 1);
    CHECK(b[0].data[0] == 1);
    CHECK(b[1].data[0] == 0);
}

// ---- configuration ----

TEST_CASE("run config: parsing, unknown keys and toggle normalization") {
    const auto cfg = FlatConfig::parse("data = d\nout = o\nsteps = 7\nlambda6 = 3\nmd = 0\nstam = 1\ngen_widths = 8,12\n");
    const RunConfig c = RunConfig::from_config(cfg, "/base");
    CHECK(c.data == std::filesystem::path("/base/d"));
    CHECK(c.steps == 7);
    CHECK(c.hp.lambda6 == 3.0);
    CHECK(c.gen.widths == std::vector<int>{8, 12});
    const RunConfig r = c.resolved();
    CHECK_FALSE(r.toggles.attention);
    CHECK_FALSE(r.adv.attention);
    CHECK_FALSE(r.adv.multiclass);

    CHECK_THROWS_AS(RunConfig::from_config(FlatConfig::parse("step = 3\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(FlatConfig::parse("gen_widths = 8,x\n")), ConfigError);
}

TEST_CASE("ablation matrix: rows and base config") {
    const auto m = AblationMatrix::parse("steps = 20\n# comment\nrow base OG=0 TP=0 MD=0 STAM=0 F=0\nrow full\n");
    CHECK(m.base.get_int("steps", 0) == 20);
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0].name == "base");
    CHECK_FALSE(m.rows[0].toggles.occlusion_gate);
    CHECK_FALSE(m.rows[0].toggles.flow_guidance);
    CHECK(m.rows[1].toggles.attention);
    CHECK_THROWS(AblationMatrix::parse("row bad XX=1\n"));

    const auto rows = AblationMatrix::standard_rows();
    REQUIRE(rows.size() == 6);
    // Each row enables exactly one more component than the previous one.
    auto on = [](const Toggles& t) {
        return int(t.occlusion_gate) + int(t.patch) + int(t.multiclass) + int(t.attention) + int(t.flow_guidance);
    };
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(on(rows[i].toggles) == static_cast<int>(i));
}

// ---- pipeline helpers ----

TEST_CASE("corrupted flow zeroes the occluded region in the matching frame") {
    Tensor flows({2, 2, 1, 2}, 1.0);
    Tensor occ({3, 1, 1, 2}, std::vector<double>{1, 0, 0, 1, 0, 0});
    const Tensor f = corrupted_flow(flows, occ, FlowDirection::forward);
    const Tensor b = corrupted_flow(flows, occ, FlowDirection::backward);
    CHECK(f == Tensor(f.shape(), {0, 1, 0, 1, 1, 0, 1, 0}));
    CHECK(b == Tensor(b.shape(), {1, 0, 1, 0, 1, 1, 1, 1}));
}

// ---- trainer ----

TEST_CASE("trainer: two runs with the same seed are bit-identical") {
    const auto data = tiny_dataset(2);
    auto run = [&] {
        Trainer tr(tiny_run_config(6, 5), data);
        std::vector<double> totals;
        for (int i = 0; i < 6; ++i) totals.push_back(tr.step().total);
        return std::make_pair(totals, tr.models().gen.params().entries()[0].var.value());
    };
    const auto a = run(), b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("trainer: every parameter receives a gradient within ten steps") {
    const auto data = tiny_dataset(2);
    RunConfig cfg = tiny_run_config(10, 1);
    Trainer tr(cfg, data);
    std::set<std::string> seen;
    auto collect = [&](const std::string& prefix, const ParamStore& store) {
        for (const auto& p : store.entries()) {
            if (!p.var.has_grad()) continue;
            const Tensor g = p.var.grad();
            for (double v : g.values())
                if (v != 0.0) {
                    seen.insert(prefix + p.name);
                    break;
                }
        }
    };
    for (int i = 0; i < 10; ++i) {
        tr.step();
        Models& m = tr.models();
        collect("shape.", m.shape.params());
        collect("flow.", m.flow.params());
        collect("gen.", m.gen.params());
        collect("adv.", m.adv.params());
    }
    Models& m = tr.models();
    std::vector<std::string> dead;
    for (const auto& [prefix, store] : std::vector<std::pair<std::string, const ParamStore*>>{
             {"shape.", &m.shape.params()}, {"flow.", &m.flow.params()}, {"gen.", &m.gen.params()},
             {"adv.", &m.adv.params()}}) {
        for (const auto& p : store->entries()) {
            // While every patch score sits inside the hinge margin the real and fake
            // terms give this bias equal and opposite gradients.
            if (prefix + p.name == "adv.patch_out.bias") continue;
            if (!seen.count(prefix + p.name)) dead.push_back(prefix + p.name);
        }
    }
    INFO("dead: " << dead.size() << (dead.empty() ? std::string() : " first " + dead.front()));
    CHECK(dead.empty());
}

TEST_CASE("trainer: without flow guidance the flow network is untouched") {
    const auto data = tiny_dataset(1);
    RunConfig cfg = tiny_run_config(3, 2);
    cfg.toggles.flow_guidance = false;
    Trainer tr(cfg, data);
    const Tensor before = tr.models().flow.params().entries()[0].var.value();
    for (int i = 0; i < 3; ++i) CHECK(tr.step().flow == 0.0);
    CHECK(tr.models().flow.params().entries()[0].var.value() == before);
}

TEST_CASE("trainer: adversarial terms start after the warmup") {
    const auto data = tiny_dataset(1);
    RunConfig cfg = tiny_run_config(5, 3);
    cfg.warmup = 0.4;
    Trainer tr(cfg, data);
    std::vector<bool> adv;
    for (int i = 0; i < 5; ++i) adv.push_back(tr.step().adversarial);
    CHECK(adv == std::vector<bool>{false, false, true, true, true});

    cfg.toggles.patch = false;
    cfg.toggles.multiclass = false;
    Trainer quiet(cfg, data);
    for (int i = 0; i < 5; ++i) CHECK_FALSE(quiet.step().adversarial);
}

TEST_CASE("trainer: total loss decreases on a repeated sample") {
    const auto data = tiny_dataset(1);
    RunConfig cfg = tiny_run_config(60, 4);
    cfg.toggles.patch = false;
    cfg.toggles.multiclass = false;
    cfg.lr = 3e-3;
    Trainer tr(cfg, data);
    double head = 0, tail = 0;
    for (int i = 0; i < 60; ++i) {
        const double t = tr.step().total;
        if (i < 5) head += t;
        if (i >= 55) tail += t;
    }
    CHECK(tail < 0.8 * head);
}

TEST_CASE("trainer: rejects classes outside the configured range") {
    auto data = tiny_dataset(1);
    data[0].sample.object_class = 3;
    CHECK_THROWS_AS(Trainer(tiny_run_config(), data), TrainingError);
}

// ---- evaluation ----

TEST_CASE("evaluate: saved outputs reproduce the report") {
    TempDir dir("voin_eval");
    const auto data = tiny_dataset(2, 4);
    RunConfig cfg = tiny_run_config(3, 6);
    cfg.out = dir / "train";
    Trainer(cfg, data).train();
    REQUIRE(std::filesystem::exists(dir / "train" / "losses.csv"));

    RunConfig ecfg = cfg.resolved();
    ecfg.out = dir / "eval";
    const auto models = InferenceModels::load(dir / "train");
    const MetricsReport rep = evaluate(ecfg, models, data);
    REQUIRE(rep.rows.size() == 2);
    double psnr_sum = 0, miou_sum = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        const std::filesystem::path sd = ecfg.out / "samples" / s.id;
        const VideoClip out = load_clip(sd / "clip");
        const auto amodal = load_masks(sd / "masks_amodal", MaskKind::amodal);
        CHECK(rep.rows[i].psnr_occ == doctest::Approx(psnr(out, *s.sample.gt_clip, &s.sample.occluded.masks)));
        CHECK(rep.rows[i].miou == doctest::Approx(miou(amodal.masks, s.sample.amodal.masks)));
        // Pixels outside the hole keep the input values.
        const auto hole = load_masks(sd / "masks_hole", MaskKind::hole);
        const VideoClip prop = load_clip(sd / "propagated");
        for (int t = 0; t < out.length(); ++t)
            for (std::size_t p = 0; p < hole.masks[t].data.size(); ++p)
                if (!hole.masks[t].data[p])
                    for (int c = 0; c < 3; ++c) CHECK(out.frames[t].data[3 * p + c] == prop.frames[t].data[3 * p + c]);
        psnr_sum += rep.rows[i].psnr_occ;
        miou_sum += rep.rows[i].miou;
    }
    CHECK(rep.psnr_occ == doctest::Approx(psnr_sum / 2));
    CHECK(rep.miou == doctest::Approx(miou_sum / 2));
    CHECK(std::filesystem::exists(ecfg.out / "report.csv"));
    CHECK(std::filesystem::exists(ecfg.out / "report.json"));
}

TEST_CASE("evaluate: a missing checkpoint names its stage") {
    TempDir dir("voin_eval_missing");
    const auto data = tiny_dataset(1);
    RunConfig cfg = tiny_run_config(1, 0);
    cfg.out = dir / "train";
    Trainer(cfg, data).train();
    std::filesystem::remove(dir / "train" / "generator.ckpt");
    RunConfig ecfg = cfg.resolved();
    ecfg.out = dir / "eval";
    const auto models = InferenceModels::load(dir / "train");
    try {
        // Untrained shape and flow leave holes, so the generator is required.
        evaluate(ecfg, models, data);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("inpainting") != std::string::npos);
    }
    std::filesystem::remove(dir / "train" / "shape.ckpt");
    try {
        evaluate(ecfg, InferenceModels::load(dir / "train"), data);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("shape") != std::string::npos);
    }
}

TEST_CASE("evaluate: flow guidance off reports the corrupted flow and inpaints the occluded mask") {
    TempDir dir("voin_eval_nof");
    const auto data = tiny_dataset(1, 3);
    RunConfig cfg = tiny_run_config(1, 0);
    cfg.toggles.flow_guidance = false;
    cfg.out = dir / "train";
    Trainer(cfg, data).train();
    CHECK_FALSE(std::filesystem::exists(dir / "train" / "flow.ckpt"));
    const auto models = InferenceModels::load(dir / "train");
    const RunConfig r = cfg.resolved();
    const PipelineOutput out = run_pipeline(data[0], models, r);
    CHECK(out.filled == 0);
    CHECK(out.propagated == data[0].sample.clip);
    CHECK(out.hole.masks == out.occluded.masks);
}

TEST_CASE("oracle pipeline recovers ground-truth masks and flow") {
    const auto data = tiny_dataset(1, 4);
    RunConfig cfg = tiny_run_config();
    cfg.oracle = true;
    const RunConfig r = cfg.resolved();
    InferenceModels models;
    models.gen.emplace(r.gen, 0);
    const auto out = run_pipeline(data[0], models, r);
    const auto rep = score_sample(data[0], out);
    CHECK(rep.miou == 100.0);
    CHECK(rep.epe_occ == 0.0);
}
