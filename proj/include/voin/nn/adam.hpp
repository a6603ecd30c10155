#pragma once

#include <cstdint>
#include <vector>

#include "voin/nn/autograd.hpp"

namespace voin::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Parameters without an accumulated gradient are skipped.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Var> params, AdamConfig config);

    void step();
    void zero_grad();
    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }
    void set_lr(double lr) { config_.lr = lr; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamConfig config_;
    std::int64_t t_ = 0;
};

}  // namespace voin::nn
