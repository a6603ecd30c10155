#pragma once

// Second implementations of the evaluation metrics, written independently of
// the library: flat buffers, separable filtering for SSIM.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "voin/core/types.hpp"

namespace voin::testing {

inline double psnr_oracle(const VideoClip& a, const VideoClip& b, const std::vector<Raster>* region) {
    std::vector<double> err;
    for (int t = 0; t < a.length(); ++t) {
        const auto& fa = a.frames[t].data;
        const auto& fb = b.frames[t].data;
        for (std::size_t i = 0; i < fa.size(); ++i) {
            if (region && !(*region)[t].data[i / 3]) continue;
            err.push_back((static_cast<double>(fa[i]) - fb[i]) * (static_cast<double>(fa[i]) - fb[i]));
        }
    }
    if (err.empty()) return 100.0;
    const double mse = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(err.size());
    return mse < 1e-10 ? 100.0 : std::min(100.0, -10.0 * std::log10(mse));
}

inline double ssim_oracle(const VideoClip& a, const VideoClip& b) {
    const int H = a.height(), W = a.width();
    const int r = std::min(5, (std::min(H, W) - 1) / 2);
    std::vector<double> g(static_cast<std::size_t>(2 * r + 1));
    for (int i = -r; i <= r; ++i) g[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / 4.5);
    const double gs = std::accumulate(g.begin(), g.end(), 0.0);
    for (double& v : g) v /= gs;
    const int Ho = H - 2 * r, Wo = W - 2 * r;
    // Valid separable filter: rows first, then columns.
    auto filter = [&](const std::vector<double>& img) {
        std::vector<double> tmp(static_cast<std::size_t>(H) * Wo), out(static_cast<std::size_t>(Ho) * Wo);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < Wo; ++x) {
                double s = 0;
                for (int k = 0; k <= 2 * r; ++k) s += g[k] * img[static_cast<std::size_t>(y) * W + x + k];
                tmp[static_cast<std::size_t>(y) * Wo + x] = s;
            }
        for (int y = 0; y < Ho; ++y)
            for (int x = 0; x < Wo; ++x) {
                double s = 0;
                for (int k = 0; k <= 2 * r; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * Wo + x];
                out[static_cast<std::size_t>(y) * Wo + x] = s;
            }
        return out;
    };
    double total = 0;
    for (int t = 0; t < a.length(); ++t) {
        std::vector<double> x(static_cast<std::size_t>(H) * W), y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto& fa = a.frames[t].data;
            const auto& fb = b.frames[t].data;
            x[i] = 0.299 * fa[3 * i] + 0.587 * fa[3 * i + 1] + 0.114 * fa[3 * i + 2];
            y[i] = 0.299 * fb[3 * i] + 0.587 * fb[3 * i + 1] + 0.114 * fb[3 * i + 2];
        }
        std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter(x), my = filter(y), sxx = filter(xx), syy = filter(yy), sxy = filter(xy);
        double acc = 0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double c1 = 1e-4, c2 = 9e-4;
            const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cv = sxy[i] - mx[i] * my[i];
            acc += (2 * mx[i] * my[i] + c1) * (2 * cv + c2) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / a.length();
}

inline double epe_oracle(const std::vector<FlowField>& a, const std::vector<FlowField>& b,
                         const std::vector<Raster>* region) {
    double s = 0;
    long n = 0;
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].uv.size() / 2; ++i) {
            if (region && !(*region)[t].data[i]) continue;
            const double du = double(a[t].uv[2 * i]) - b[t].uv[2 * i], dv = double(a[t].uv[2 * i + 1]) - b[t].uv[2 * i + 1];
            s += std::sqrt(du * du + dv * dv);
            ++n;
        }
    return n ? s / static_cast<double>(n) : 0.0;
}

inline double miou_oracle(const std::vector<Raster>& a, const std::vector<Raster>& b) {
    double s = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const auto inter = std::inner_product(a[t].data.begin(), a[t].data.end(), b[t].data.begin(), 0L, std::plus<>(),
                                              [](auto p, auto q) { return long((p != 0) & (q != 0)); });
        const auto uni = std::inner_product(a[t].data.begin(), a[t].data.end(), b[t].data.begin(), 0L, std::plus<>(),
                                            [](auto p, auto q) { return long((p != 0) | (q != 0)); });
        s += uni ? 100.0 * static_cast<double>(inter) / static_cast<double>(uni) : 100.0;
    }
    return s / static_cast<double>(a.size());
}

}  // namespace voin::testing
