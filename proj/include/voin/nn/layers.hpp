#pragma once

#include <array>
#include <string>
#include <vector>

#include "voin/core/rng.hpp"
#include "voin/nn/ops.hpp"
#include "voin/nn/params.hpp"

namespace voin::nn {

/// Uniform(−b, b) with b = sqrt(6 / ((1 + slope²)·fan_in)).
Tensor kaiming_uniform(Shape shape, std::int64_t fan_in, Rng& rng, double slope = 0.2);

struct Conv2d {
    Var weight;
    Var bias;
    int stride = 1;
    int pad = 0;

    Conv2d() = default;
    Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, int pad, Rng& rng,
           bool with_bias = true);

    Var operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }
    int out_channels() const { return static_cast<int>(weight.dim(0)); }
};

struct Conv3d {
    Var weight;
    Var bias;
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{0, 0, 0};

    Conv3d() = default;
    Conv3d(ParamStore& store, const std::string& name, int in, int out, std::array<int, 3> kernel,
           std::array<int, 3> stride, std::array<int, 3> pad, Rng& rng, bool with_bias = true);

    Var operator()(const Var& x) const { return conv3d(x, weight, bias, stride, pad); }
    Var operator()(const Var& x, const Var& w) const { return conv3d(x, w, bias, stride, pad); }
};

/// y = x·W + b with W stored in×out.
struct Linear {
    Var weight;
    Var bias;

    Linear() = default;
    Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng, bool with_bias = true);

    Var operator()(const Var& x) const { return (*this)(x, weight); }
    Var operator()(const Var& x, const Var& w) const;
};

/// Layer normalization over axis 1 of an N×C×H×W tensor, separately at every
/// position, followed by a per-channel gain (init 1) and bias (init 0).
struct ChannelNorm {
    Var gain;
    Var bias;
    double eps = 1e-5;

    ChannelNorm() = default;
    ChannelNorm(ParamStore& store, const std::string& name, int channels);

    Var operator()(const Var& x) const;
};

/// Spectral normalisation of a weight viewed as (dim0 × rest). The power
/// iteration state is advanced only by power_iteration(), so forward passes
/// are pure functions of the weight.
class SpectralNorm {
public:
    SpectralNorm() = default;
    SpectralNorm(Var weight, Rng& rng);

    void power_iteration();
    /// W / σ with σ = uᵀ W v, differentiable in W for fixed u, v.
    Var normalized() const;
    double sigma() const;

private:
    Var weight_;
    std::vector<double> u_;
    std::vector<double> v_;
};

}  // namespace voin::nn
