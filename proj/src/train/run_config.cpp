#include "voin/train/run_config.hpp"

#include <sstream>

#include "voin/core/error.hpp"

namespace voin::train {

namespace {

std::vector<int> parse_ints(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(key + ": expected a comma-separated integer list, got '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

}  // namespace

Toggles Toggles::normalized() const {
    Toggles t = *this;
    if (!t.multiclass) t.attention = false;
    return t;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k{
        "data", "out", "seed", "steps", "batch_size", "lr", "beta1", "beta2", "warmup", "log_every", "classes",
        "max_sweeps", "oracle", "grids", "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6",
        "lambda_flow", "lambda_app", "temporal_field", "cycle_threshold", "og", "tp", "md", "stam", "f",
        "shape_channels", "shape_layers", "shape_scales", "shape_key_dim", "shape_embed_dim", "semantic",
        "positional_encoding", "flow_widths", "amodal_guidance", "gen_widths", "patch_widths", "class_widths"};
    return k;
}

RunConfig RunConfig::from_config(const FlatConfig& cfg, const std::filesystem::path& base) {
    cfg.require_known(keys());
    RunConfig c;
    auto path = [&](const std::string& key) -> std::filesystem::path {
        if (!cfg.has(key)) return {};
        std::filesystem::path p = cfg.get_string(key, "");
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    c.data = path("data");
    c.out = path("out");
    c.seed = cfg.get_u64("seed", c.seed);
    c.steps = static_cast<int>(cfg.get_int("steps", c.steps));
    c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
    c.lr = cfg.get_double("lr", c.lr);
    c.beta1 = cfg.get_double("beta1", c.beta1);
    c.beta2 = cfg.get_double("beta2", c.beta2);
    c.warmup = cfg.get_double("warmup", c.warmup);
    c.log_every = static_cast<int>(cfg.get_int("log_every", c.log_every));
    c.classes = static_cast<int>(cfg.get_int("classes", c.classes));
    c.max_sweeps = static_cast<int>(cfg.get_int("max_sweeps", c.max_sweeps));
    c.oracle = cfg.get_bool("oracle", c.oracle);
    c.grids = cfg.get_bool("grids", c.grids);

    HyperParams& hp = c.hp;
    hp.lambda1 = cfg.get_double("lambda1", hp.lambda1);
    hp.lambda2 = cfg.get_double("lambda2", hp.lambda2);
    hp.lambda3 = cfg.get_double("lambda3", hp.lambda3);
    hp.lambda4 = cfg.get_double("lambda4", hp.lambda4);
    hp.lambda5 = cfg.get_double("lambda5", hp.lambda5);
    hp.lambda6 = cfg.get_double("lambda6", hp.lambda6);
    hp.lambda_flow = cfg.get_double("lambda_flow", hp.lambda_flow);
    hp.lambda_app = cfg.get_double("lambda_app", hp.lambda_app);
    hp.temporal_field = static_cast<int>(cfg.get_int("temporal_field", hp.temporal_field));
    hp.cycle_threshold = cfg.get_double("cycle_threshold", hp.cycle_threshold);

    Toggles& t = c.toggles;
    t.occlusion_gate = cfg.get_bool("og", t.occlusion_gate);
    t.patch = cfg.get_bool("tp", t.patch);
    t.multiclass = cfg.get_bool("md", t.multiclass);
    t.attention = cfg.get_bool("stam", t.attention);
    t.flow_guidance = cfg.get_bool("f", t.flow_guidance);

    c.shape.channels = static_cast<int>(cfg.get_int("shape_channels", c.shape.channels));
    c.shape.layers = static_cast<int>(cfg.get_int("shape_layers", c.shape.layers));
    if (cfg.has("shape_scales")) c.shape.patch_scales = parse_ints(cfg.get_string("shape_scales", ""), "shape_scales");
    c.shape.key_dim = static_cast<int>(cfg.get_int("shape_key_dim", c.shape.key_dim));
    c.shape.embed_dim = static_cast<int>(cfg.get_int("shape_embed_dim", c.shape.embed_dim));
    c.shape.semantic = cfg.get_bool("semantic", c.shape.semantic);
    c.shape.positional_encoding = cfg.get_bool("positional_encoding", c.shape.positional_encoding);
    if (cfg.has("flow_widths")) c.flow.widths = parse_ints(cfg.get_string("flow_widths", ""), "flow_widths");
    c.flow.amodal_guidance = cfg.get_bool("amodal_guidance", c.flow.amodal_guidance);
    if (cfg.has("gen_widths")) c.gen.widths = parse_ints(cfg.get_string("gen_widths", ""), "gen_widths");
    if (cfg.has("patch_widths")) c.adv.patch_widths = parse_ints(cfg.get_string("patch_widths", ""), "patch_widths");
    if (cfg.has("class_widths")) c.adv.class_widths = parse_ints(cfg.get_string("class_widths", ""), "class_widths");
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    return from_config(FlatConfig::load(path), path.parent_path());
}

RunConfig RunConfig::resolved() const {
    RunConfig c = *this;
    c.toggles = toggles.normalized();
    c.shape.classes = classes;
    c.gen.temporal_field = hp.temporal_field;
    c.gen.occlusion_gate = c.toggles.occlusion_gate;
    c.adv.classes = classes;
    c.adv.patch = c.toggles.patch;
    c.adv.multiclass = c.toggles.multiclass;
    c.adv.attention = c.toggles.attention;
    c.hp.heads = c.shape.heads();
    c.hp.key_dim = c.shape.key_dim;
    return c;
}

void RunConfig::validate() const {
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(lr > 0)) throw ConfigError("lr must be positive");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(warmup >= 0 && warmup <= 1)) throw ConfigError("warmup must lie in [0, 1]");
    if (classes < 1) throw ConfigError("classes must be positive");
    if (max_sweeps < 0) throw ConfigError("max_sweeps must be non-negative");
    hp.validate();
    const RunConfig r = resolved();
    r.shape.validate();
    r.flow.validate();
    r.gen.validate();
    r.adv.validate();
}

}  // namespace voin::train
