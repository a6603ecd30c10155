#include "voin/core/sample.hpp"

#include <fstream>
#include <sstream>

#include "voin/core/config.hpp"
#include "voin/core/error.hpp"
#include "voin/core/io.hpp"

namespace voin {

Sample load_sample(const fs::path& dir) {
    Sample s;
    s.clip = load_clip(dir / "clip");
    if (fs::is_directory(dir / "gt")) s.gt_clip = load_clip(dir / "gt");
    s.visible = load_masks(dir / "masks_visible", MaskKind::visible);
    s.amodal = load_masks(dir / "masks_amodal", MaskKind::amodal);
    s.occluded = load_masks(dir / "masks_occ", MaskKind::occluded);
    s.flow_fwd = load_flow_sequence(dir / "flow_fwd", FlowDirection::forward);
    s.flow_bwd = load_flow_sequence(dir / "flow_bwd", FlowDirection::backward);
    if (fs::exists(dir / "meta.txt")) {
        const auto meta = FlatConfig::load(dir / "meta.txt");
        s.object_class = static_cast<int>(meta.get_int("class", 0));
        s.seed = meta.get_u64("seed", 0);
    }
    return s;
}

void save_sample(const Sample& sample, const fs::path& dir) {
    save_clip(sample.clip, dir / "clip");
    if (sample.gt_clip) save_clip(*sample.gt_clip, dir / "gt");
    save_masks(sample.visible, dir / "masks_visible");
    save_masks(sample.amodal, dir / "masks_amodal");
    save_masks(sample.occluded, dir / "masks_occ");
    save_flow_sequence(sample.flow_fwd, dir / "flow_fwd");
    save_flow_sequence(sample.flow_bwd, dir / "flow_bwd");
    std::ofstream meta(dir / "meta.txt", std::ios::trunc);
    if (!meta) throw IoError("cannot write " + (dir / "meta.txt").string());
    meta << "class = " << sample.object_class << "\nseed = " << sample.seed << "\n";
}

}  // namespace voin
