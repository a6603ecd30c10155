#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "voin/core/rng.hpp"
#include "voin/nn/autograd.hpp"

namespace voin::testing {

struct GradCheck {
    double max_rel = 0.0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::int64_t checked = 0;
    bool any_nonzero = false;
};

/// Relative error with a floor on the denominator so entries that are zero
/// on both sides do not divide by zero.
inline double relative_error(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

/// Compares the reverse-mode gradient of `loss()` w.r.t. `x` with central
/// differences. When `max_entries` > 0 a seeded random subset is checked.
inline GradCheck check_gradient(nn::Var x, const std::function<nn::Var()>& loss, double h = 1e-6,
                                std::int64_t max_entries = -1, std::uint64_t seed = 1) {
    x.zero_grad();
    nn::Var l = loss();
    l.backward();
    const nn::Tensor analytic = x.grad();
    std::vector<std::int64_t> idx(static_cast<std::size_t>(x.numel()));
    for (std::int64_t i = 0; i < x.numel(); ++i) idx[static_cast<std::size_t>(i)] = i;
    if (max_entries > 0 && max_entries < x.numel()) {
        Rng rng(seed);
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            std::swap(idx[i], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
        }
        idx.resize(static_cast<std::size_t>(max_entries));
    }
    GradCheck out;
    nn::NoGradGuard guard;
    for (auto i : idx) {
        double& w = x.mutable_value()[i];
        const double saved = w;
        w = saved + h;
        const double fp = loss().item();
        w = saved - h;
        const double fm = loss().item();
        w = saved;
        const double numeric = (fp - fm) / (2 * h);
        const double rel = relative_error(analytic[i], numeric);
        if (analytic[i] != 0.0) out.any_nonzero = true;
        if (rel > out.max_rel) {
            out.max_rel = rel;
            out.worst_analytic = analytic[i];
            out.worst_numeric = numeric;
        }
        ++out.checked;
    }
    return out;
}

}  // namespace voin::testing
