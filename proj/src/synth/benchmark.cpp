#include "voin/synth/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "voin/core/error.hpp"
#include "voin/core/io.hpp"
#include "voin/core/rng.hpp"
#include "voin/core/validate.hpp"

namespace voin::synth {

namespace {

constexpr int kMaxBisection = 20;
constexpr int kMaxRetries = 5;

double quarter_grid(double v, double lo) {
    double q = std::floor(v * 4.0) / 4.0;
    while (q < lo) q += 0.25;
    return q;
}

TextureSpec occluder_texture(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 7));
    TextureSpec t;
    t.kind = TextureKind::checker;
    for (int c = 0; c < 3; ++c) {
        t.primary[c] = static_cast<float>(rng.uniform(0.0, 1.0));
        t.secondary[c] = 1.0f - t.primary[c];
    }
    t.scale = 2.0;
    t.angle = rng.uniform(0.0, M_PI);
    return t;
}

std::vector<Raster> union_occluders(const std::vector<OccluderSpec>& occluders, int H, int W, int T, double scale) {
    std::vector<Raster> out(static_cast<std::size_t>(T), Raster(H, W));
    for (const auto& spec : occluders) {
        const auto frames = animate_occluder(spec, H, W, T, scale);
        for (int t = 0; t < T; ++t) {
            for (std::size_t i = 0; i < out[t].data.size(); ++i) out[t].data[i] |= frames[t].data[i];
        }
    }
    return out;
}

std::vector<double> frame_degrees(const std::vector<Raster>& occ, const MaskSequence& amodal) {
    std::vector<double> d;
    for (std::size_t t = 0; t < occ.size(); ++t) {
        const Raster& a = amodal.masks[t];
        Raster o(a.height, a.width);
        for (std::size_t i = 0; i < o.data.size(); ++i) o.data[i] = a.data[i] & occ[t].data[i];
        d.push_back(occlusion_degree(o, a));
    }
    return d;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string sample_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%04d", i);
    return buf;
}

}  // namespace

double occlusion_degree(const Raster& occluded, const Raster& amodal) {
    const std::size_t total = amodal.count();
    if (total == 0) return 0.0;
    return static_cast<double>(occluded.count()) / static_cast<double>(total);
}

double SynthSample::mean_degree() const { return mean_of(degrees); }

SynthSample synth_sample(const SceneSpec& scene, const std::vector<OccluderSpec>& occluders, double target_degree,
                         double tol) {
    if (!(target_degree >= 0.0 && target_degree <= 1.0)) throw ParameterError("target degree must lie in [0, 1]");
    if (!(tol > 0.0)) throw ParameterError("degree tolerance must be positive");
    const int H = scene.height;
    const int W = scene.width;
    const int T = scene.length;
    RenderedScene rendered = render_scene(scene);
    const VideoClip gt = quantized(rendered.gt_clip);

    std::vector<Raster> occ(static_cast<std::size_t>(T), Raster(H, W));
    std::vector<double> degrees(static_cast<std::size_t>(T), 0.0);
    if (!occluders.empty()) {
        auto evaluate = [&](double scale) {
            occ = union_occluders(occluders, H, W, T, scale);
            degrees = frame_degrees(occ, rendered.amodal);
            return mean_of(degrees);
        };
        double lo = 0.0;
        double hi = 2.0 * std::hypot(H, W) / std::max(1e-6, occluders.front().brush_width) + 1.0;
        bool hit = std::abs(evaluate(lo) - target_degree) <= tol;
        if (!hit) {
            if (evaluate(hi) < target_degree - tol) {
                throw SynthesisError("occluder cannot reach degree " + std::to_string(target_degree) +
                                     "; try a different seed");
            }
            for (int it = 0; it < kMaxBisection && !hit; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double d = evaluate(mid);
                if (std::abs(d - target_degree) <= tol) hit = true;
                else if (d < target_degree) lo = mid;
                else hi = mid;
            }
        }
        if (!hit) {
            throw SynthesisError("bisection missed degree " + std::to_string(target_degree) + " ± " +
                                 std::to_string(tol) + "; try a different seed");
        }
    } else if (target_degree > tol) {
        throw SynthesisError("no occluders but target degree " + std::to_string(target_degree));
    }

    SynthSample out;
    Sample& s = out.sample;
    s.gt_clip = gt;
    s.clip = gt;
    const TextureSpec occ_tex = occluder_texture(occluders.empty() ? scene.seed : occluders.front().seed);
    for (int t = 0; t < T; ++t) {
        Raster vis(H, W), occluded(H, W);
        const Raster& amo = rendered.amodal.masks[t];
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (occ[t].at(y, x)) {
                    const Color c = sample_texture(occ_tex, x, y);
                    for (int ch = 0; ch < 3; ++ch) s.clip.frames[t].at(y, x, ch) = c[ch];
                }
                if (amo.at(y, x)) (occ[t].at(y, x) ? occluded : vis).at(y, x) = 1;
            }
        }
        s.visible.masks.push_back(std::move(vis));
        s.occluded.masks.push_back(std::move(occluded));
    }
    s.clip = quantized(s.clip);
    s.amodal = std::move(rendered.amodal);
    s.flow_fwd = std::move(rendered.flow_fwd);
    s.flow_bwd = std::move(rendered.flow_bwd);
    s.object_class = scene.object_class;
    s.seed = scene.seed;
    out.degrees = std::move(degrees);
    validate_sample(s);
    return out;
}

const std::vector<std::string>& SynthConfig::keys() {
    static const std::vector<std::string> k{"height",     "width",        "length",       "classes",
                                            "num",        "seed",         "degree_min",   "degree_max",
                                            "tol",        "motion",       "max_speed",    "occluders",
                                            "stroke_count", "vertex_count", "brush_width", "deformation_amplitude",
                                            "threads"};
    return k;
}

SynthConfig SynthConfig::from_config(const FlatConfig& cfg) {
    cfg.require_known(keys());
    SynthConfig c;
    c.height = static_cast<int>(cfg.get_int("height", c.height));
    c.width = static_cast<int>(cfg.get_int("width", c.width));
    c.length = static_cast<int>(cfg.get_int("length", c.length));
    c.classes = static_cast<int>(cfg.get_int("classes", c.classes));
    c.num = static_cast<int>(cfg.get_int("num", c.num));
    c.seed = cfg.get_u64("seed", c.seed);
    c.degree_min = cfg.get_double("degree_min", c.degree_min);
    c.degree_max = cfg.get_double("degree_max", c.degree_max);
    c.tol = cfg.get_double("tol", c.tol);
    c.motion = cfg.get_string("motion", c.motion);
    c.max_speed = static_cast<int>(cfg.get_int("max_speed", c.max_speed));
    c.occluders = static_cast<int>(cfg.get_int("occluders", c.occluders));
    c.stroke_count = static_cast<int>(cfg.get_int("stroke_count", c.stroke_count));
    c.vertex_count = static_cast<int>(cfg.get_int("vertex_count", c.vertex_count));
    c.brush_width = cfg.get_double("brush_width", c.brush_width);
    c.deformation_amplitude = cfg.get_double("deformation_amplitude", c.deformation_amplitude);
    c.threads = static_cast<int>(cfg.get_int("threads", c.threads));
    return c;
}

void SynthConfig::validate() const {
    if (height < 8 || width < 8) throw ConfigError("height and width must be at least 8");
    if (length < 2) throw ConfigError("length must be at least 2");
    if (classes < 1) throw ConfigError("classes must be positive");
    if (num < 1) throw ConfigError("num must be positive");
    if (!(degree_min >= 0.0 && degree_min <= degree_max && degree_max <= 1.0)) {
        throw ConfigError("degree band must satisfy 0 <= degree_min <= degree_max <= 1");
    }
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (motion != "translation" && motion != "affine") throw ConfigError("motion must be translation or affine");
    if (max_speed < 0) throw ConfigError("max_speed must be non-negative");
    if (occluders < 0) throw ConfigError("occluders must be non-negative");
    if (stroke_count < 1 || vertex_count < 1) throw ConfigError("stroke_count and vertex_count must be positive");
    if (brush_width < 0) throw ConfigError("brush_width must be non-negative");
}

SceneSpec random_scene(const SynthConfig& cfg, std::uint64_t seed, int object_class) {
    Rng rng(seed);
    SceneSpec s;
    s.seed = seed;
    s.height = cfg.height;
    s.width = cfg.width;
    s.length = cfg.length;
    s.object_class = object_class;
    s.shape.kind = shape_for_class(object_class);
    const double side = std::min(cfg.height, cfg.width);
    s.shape.radius_x = side * rng.uniform(0.16, 0.22);
    s.shape.radius_y = side * rng.uniform(0.16, 0.22);
    s.object_texture = random_texture(static_cast<TextureKind>(rng.uniform_int(0, 2)), rng, 0.35, 0.95);
    s.background_texture = random_texture(static_cast<TextureKind>(rng.uniform_int(0, 2)), rng, 0.05, 0.5);

    const int steps = cfg.length - 1;
    double ext_x = s.shape.radius_x;
    double ext_y = s.shape.radius_y;
    if (cfg.motion == "translation") {
        auto pick_speed = [&](double extent, int size) {
            const double room = size - 3.0 - 2.0 * extent;
            int v = static_cast<int>(rng.uniform_int(-cfg.max_speed, cfg.max_speed));
            while (v != 0 && std::abs(v) * steps > room) v += v > 0 ? -1 : 1;
            return v;
        };
        s.trajectory.dx = pick_speed(ext_x, cfg.width);
        s.trajectory.dy = pick_speed(ext_y, cfg.height);
    } else {
        s.shape.angle0 = rng.uniform(0.0, 2.0 * M_PI);
        s.trajectory.rotation = rng.uniform(-0.1, 0.1);
        s.trajectory.scale_rate = rng.uniform(-0.02, 0.02);
        const double grow = std::max(1.0, 1.0 + steps * s.trajectory.scale_rate);
        ext_x = ext_y = std::hypot(s.shape.radius_x, s.shape.radius_y) * grow;
        auto pick_speed = [&](double extent, int size) {
            const double room = std::max(0.0, size - 3.0 - 2.0 * extent);
            const double cap = std::min<double>(cfg.max_speed, room / std::max(1, steps));
            return rng.uniform(-cap, cap);
        };
        s.trajectory.dx = pick_speed(ext_x, cfg.width);
        s.trajectory.dy = pick_speed(ext_y, cfg.height);
    }
    auto pick_center = [&](double extent, double velocity, int size) {
        const double lo = 1.0 + extent + std::max(0.0, -velocity * steps);
        const double hi = size - 2.0 - extent - std::max(0.0, velocity * steps);
        return quarter_grid(rng.uniform(lo, std::max(lo, hi)), lo);
    };
    s.shape.center_x = pick_center(ext_x, s.trajectory.dx, cfg.width);
    s.shape.center_y = pick_center(ext_y, s.trajectory.dy, cfg.height);
    return s;
}

std::vector<OccluderSpec> random_occluders(const SynthConfig& cfg, const SceneSpec& scene, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x0CC));
    std::vector<OccluderSpec> out;
    const double side = std::min(cfg.height, cfg.width);
    for (int i = 0; i < cfg.occluders; ++i) {
        OccluderSpec o;
        o.seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(i));
        o.stroke_count = cfg.stroke_count;
        o.vertex_count = cfg.vertex_count;
        o.brush_width = cfg.brush_width > 0 ? cfg.brush_width : std::max(2.0, side / 8.0);
        o.anchor = std::array<double, 2>{scene.shape.center_x + rng.uniform(-0.5, 0.5) * scene.shape.radius_x,
                                         scene.shape.center_y + rng.uniform(-0.5, 0.5) * scene.shape.radius_y};
        const double heading = rng.uniform(0.0, 2.0 * M_PI);
        const double speed = rng.uniform(1.5, 3.0);
        o.trajectory.dx = scene.trajectory.dx + speed * std::cos(heading);
        o.trajectory.dy = scene.trajectory.dy + speed * std::sin(heading);
        o.trajectory.rotation = rng.uniform(-0.05, 0.05);
        o.deformation_amplitude = cfg.deformation_amplitude;
        o.deformation_frequency = static_cast<double>(rng.uniform_int(2, 5));
        out.push_back(o);
    }
    return out;
}

SynthSample synth_one(const SynthConfig& cfg, std::uint64_t seed, int object_class, double target_degree,
                      std::vector<std::string>* failures) {
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
        try {
            const SceneSpec scene = random_scene(cfg, s, object_class);
            return synth_sample(scene, random_occluders(cfg, scene, s), target_degree, cfg.tol);
        } catch (const SynthesisError& e) {
            if (failures) failures->push_back("seed " + std::to_string(s) + ": " + e.what());
        } catch (const BoundsError& e) {
            if (failures) failures->push_back("seed " + std::to_string(s) + ": " + e.what());
        }
    }
    throw SynthesisError("seed " + std::to_string(seed) + " failed after " + std::to_string(kMaxRetries) +
                         " retries");
}

DatasetReport synth_dataset(const SynthConfig& cfg, const fs::path& out) {
    cfg.validate();
    fs::create_directories(out);
    const int N = cfg.num;
    std::vector<double> targets(static_cast<std::size_t>(N));
    Rng strat(derive_seed(cfg.seed, 0xD15));
    for (int i = 0; i < N; ++i) {
        targets[i] = cfg.degree_min + (cfg.degree_max - cfg.degree_min) * (i + strat.uniform()) / N;
    }

    std::vector<std::optional<IndexRow>> rows(static_cast<std::size_t>(N));
    std::vector<std::vector<std::string>> failures(static_cast<std::size_t>(N));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(N));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < N; i = next++) {
            try {
                const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
                const int cls = i % cfg.classes;
                SynthSample s = synth_one(cfg, seed, cls, targets[i], &failures[i]);
                const fs::path dir = out / sample_name(i);
                fs::remove_all(dir);
                save_sample(s.sample, dir);
                rows[i] = IndexRow{sample_name(i), s.sample.seed, cls, s.mean_degree()};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int threads = std::clamp(cfg.threads > 0 ? cfg.threads : hw, 1, N);
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    DatasetReport report;
    for (int i = 0; i < N; ++i) {
        report.rows.push_back(*rows[i]);
        for (auto& f : failures[i]) report.failures.push_back(sample_name(i) + " " + f);
    }
    std::ofstream index(out / "index.csv", std::ios::trunc);
    if (!index) throw IoError("cannot write " + (out / "index.csv").string());
    index << "sample_id,seed,class,mean_degree\n";
    for (const auto& r : report.rows) {
        char degree[32];
        std::snprintf(degree, sizeof degree, "%.6f", r.mean_degree);
        index << r.sample_id << ',' << r.seed << ',' << r.object_class << ',' << degree << '\n';
    }
    return report;
}

std::vector<IndexRow> read_index(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "sample_id,seed,class,mean_degree") {
        throw FormatError(path.string() + ": unexpected index header");
    }
    std::vector<IndexRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, seed, cls, degree;
        if (!std::getline(ss, id, ',') || !std::getline(ss, seed, ',') || !std::getline(ss, cls, ',') ||
            !std::getline(ss, degree)) {
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        }
        try {
            rows.push_back(IndexRow{id, std::stoull(seed), std::stoi(cls), std::stod(degree)});
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        }
    }
    return rows;
}

}  // namespace voin::synth
