#include "voin/train/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "voin/core/error.hpp"

namespace voin::train {

namespace {

void require_same(const VideoClip& a, const VideoClip& b) {
    if (a.length() != b.length() || a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError("metric inputs differ in shape");
    }
}

std::vector<double> luma(const Image& img) {
    std::vector<double> g(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            g[static_cast<std::size_t>(y) * img.width + x] =
                0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
        }
    return g;
}

}  // namespace

double psnr(const VideoClip& y, const VideoClip& gt, const std::vector<Raster>* region) {
    require_same(y, gt);
    if (region && static_cast<int>(region->size()) != y.length()) throw ShapeError("psnr: region length differs");
    double se = 0.0;
    std::size_t n = 0;
    for (int t = 0; t < y.length(); ++t) {
        const Image& a = y.frames[t];
        const Image& b = gt.frames[t];
        for (int py = 0; py < a.height; ++py)
            for (int px = 0; px < a.width; ++px) {
                if (region && !(*region)[t].at(py, px)) continue;
                for (int c = 0; c < 3; ++c) {
                    const double d = static_cast<double>(a.at(py, px, c)) - b.at(py, px, c);
                    se += d * d;
                }
                n += 3;
            }
    }
    if (n == 0) return kPsnrCap;
    const double mse = se / static_cast<double>(n);
    if (mse < 1e-10) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const VideoClip& y, const VideoClip& gt) {
    require_same(y, gt);
    const int H = y.height(), W = y.width();
    const int radius = std::min(5, (std::min(H, W) - 1) / 2);
    const int size = 2 * radius + 1;
    std::vector<double> window(static_cast<std::size_t>(size) * size);
    double wsum = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const double d2 = (i - radius) * (i - radius) + (j - radius) * (j - radius);
            wsum += window[static_cast<std::size_t>(i) * size + j] = std::exp(-d2 / (2 * 1.5 * 1.5));
        }
    for (double& w : window) w /= wsum;
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    double total = 0.0;
    for (int t = 0; t < y.length(); ++t) {
        const auto a = luma(y.frames[t]), b = luma(gt.frames[t]);
        double frame_sum = 0.0;
        int count = 0;
        for (int cy = radius; cy < H - radius; ++cy)
            for (int cx = radius; cx < W - radius; ++cx) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int i = 0; i < size; ++i)
                    for (int j = 0; j < size; ++j) {
                        const double w = window[static_cast<std::size_t>(i) * size + j];
                        const std::size_t k = static_cast<std::size_t>(cy + i - radius) * W + (cx + j - radius);
                        ma += w * a[k];
                        mb += w * b[k];
                        saa += w * a[k] * a[k];
                        sbb += w * b[k] * b[k];
                        sab += w * a[k] * b[k];
                    }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                frame_sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        total += frame_sum / count;
    }
    return total / y.length();
}

double epe(const std::vector<FlowField>& pred, const std::vector<FlowField>& gt, const std::vector<Raster>* region) {
    if (pred.size() != gt.size()) throw ShapeError("epe: sequence lengths differ");
    if (region && region->size() != pred.size()) throw ShapeError("epe: region length differs");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const FlowField& a = pred[t];
        const FlowField& b = gt[t];
        if (a.height != b.height || a.width != b.width) throw ShapeError("epe: flow sizes differ");
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                if (region && !(*region)[t].at(y, x)) continue;
                sum += std::hypot(static_cast<double>(a.u(y, x)) - b.u(y, x), static_cast<double>(a.v(y, x)) - b.v(y, x));
                ++n;
            }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double miou(const std::vector<Raster>& pred, const std::vector<Raster>& gt) {
    if (pred.size() != gt.size() || pred.empty()) throw ShapeError("miou: sequence lengths differ or are empty");
    double total = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].data.size() != gt[t].data.size()) throw ShapeError("miou: mask sizes differ");
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred[t].data.size(); ++i) {
            const bool p = pred[t].data[i] != 0, g = gt[t].data[i] != 0;
            inter += p && g;
            uni += p || g;
        }
        total += uni == 0 ? 100.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(pred.size());
}

std::vector<Raster> flow_regions(const MaskSequence& masks, FlowDirection direction) {
    std::vector<Raster> out;
    const int offset = direction == FlowDirection::forward ? 0 : 1;
    for (int t = 0; t + 1 < masks.length(); ++t) out.push_back(masks.masks[t + offset]);
    return out;
}

}  // namespace voin::train
