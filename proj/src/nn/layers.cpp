#include "voin/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace voin::nn {

Tensor kaiming_uniform(Shape shape, std::int64_t fan_in, Rng& rng, double slope) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(6.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride_, int pad_,
               Rng& rng, bool with_bias)
    : stride(stride_), pad(pad_) {
    weight = store.add(name + ".weight", kaiming_uniform({out, in, kernel, kernel}, in * kernel * kernel, rng));
    if (with_bias) bias = store.add(name + ".bias", Tensor({out}, 0.0));
}

Conv3d::Conv3d(ParamStore& store, const std::string& name, int in, int out, std::array<int, 3> kernel,
               std::array<int, 3> stride_, std::array<int, 3> pad_, Rng& rng, bool with_bias)
    : stride(stride_), pad(pad_) {
    const int fan_in = in * kernel[0] * kernel[1] * kernel[2];
    weight = store.add(name + ".weight", kaiming_uniform({out, in, kernel[0], kernel[1], kernel[2]}, fan_in, rng));
    if (with_bias) bias = store.add(name + ".bias", Tensor({out}, 0.0));
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng, bool with_bias) {
    weight = store.add(name + ".weight", kaiming_uniform({in, out}, in, rng));
    if (with_bias) bias = store.add(name + ".bias", Tensor({out}, 0.0));
}

ChannelNorm::ChannelNorm(ParamStore& store, const std::string& name, int channels) {
    gain = store.add(name + ".gain", Tensor({1, channels, 1, 1}, 1.0));
    bias = store.add(name + ".bias", Tensor({1, channels, 1, 1}, 0.0));
}

Var ChannelNorm::operator()(const Var& x) const {
    const Var centered = x - mean(x, {1}, true);
    const Var var = mean(square(centered), {1}, true);
    return centered / sqrt(var + eps) * gain + bias;
}

Var Linear::operator()(const Var& x, const Var& w) const {
    Var y = matmul(x, w);
    return bias.defined() ? y + bias : y;
}

namespace {

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n) + 1e-12;
    for (double& x : v) x /= n;
}

}  // namespace

SpectralNorm::SpectralNorm(Var weight, Rng& rng) : weight_(std::move(weight)) {
    const std::int64_t rows = weight_.dim(0);
    u_.resize(static_cast<std::size_t>(rows));
    v_.resize(static_cast<std::size_t>(weight_.numel() / rows));
    for (double& x : u_) x = rng.normal();
    normalize(u_);
    power_iteration();
}

void SpectralNorm::power_iteration() {
    const double* w = weight_.value().data();
    const std::size_t nu = u_.size(), nv = v_.size();
    std::fill(v_.begin(), v_.end(), 0.0);
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nv; ++j) v_[j] += w[i * nv + j] * u_[i];
    }
    normalize(v_);
    for (std::size_t i = 0; i < nu; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nv; ++j) s += w[i * nv + j] * v_[j];
        u_[i] = s;
    }
    normalize(u_);
}

double SpectralNorm::sigma() const {
    const double* w = weight_.value().data();
    const std::size_t nu = u_.size(), nv = v_.size();
    double s = 0.0;
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nv; ++j) s += u_[i] * w[i * nv + j] * v_[j];
    }
    return s;
}

Var SpectralNorm::normalized() const {
    Tensor outer(weight_.shape());
    const std::size_t nu = u_.size(), nv = v_.size();
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nv; ++j) outer[static_cast<std::int64_t>(i * nv + j)] = u_[i] * v_[j];
    }
    Var sigma = sum(weight_ * constant(std::move(outer)));
    // A zero weight has no direction to normalise.
    if (std::abs(sigma.item()) < 1e-12) return weight_;
    return weight_ / sigma;
}

}  // namespace voin::nn
