#pragma once

#include <array>
#include <vector>

#include "voin/nn/autograd.hpp"

namespace voin::nn {

// Elementwise arithmetic with numpy-style broadcasting.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double s);
Var operator*(const Var& a, double s);
inline Var operator+(double s, const Var& a) { return a + s; }
inline Var operator-(const Var& a, double s) { return a + (-s); }
inline Var operator-(double s, const Var& a) { return (-a) + s; }
inline Var operator*(double s, const Var& a) { return a * s; }
inline Var operator/(const Var& a, double s) { return a * (1.0 / s); }

// Unary maps. abs'(0) is taken as 0.
Var exp(const Var& x);
Var log(const Var& x);
Var sigmoid(const Var& x);
/// log(1 + e^x), stable for large |x|.
Var softplus(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope = 0.2);
Var tanh(const Var& x);
Var abs(const Var& x);
Var square(const Var& x);
Var sqrt(const Var& x);
/// Gradient passes only where lo < x < hi.
Var clamp(const Var& x, double lo, double hi);

// Reductions.
Var sum(const Var& x);
Var mean(const Var& x);
Var sum(const Var& x, const std::vector<int>& axes, bool keepdim = false);
Var mean(const Var& x, const std::vector<int>& axes, bool keepdim = false);
Var max(const Var& x, int axis, bool keepdim = false);

// Layout.
Var reshape(const Var& x, Shape shape);
Var permute(const Var& x, const std::vector<int>& order);
Var concat(const std::vector<Var>& xs, int axis);
Var slice(const Var& x, int axis, std::int64_t start, std::int64_t length);

/// (m×k)(k×n), or batched (b×m×k)(b×k×n); optional transposes of the trailing two axes.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);
Var softmax(const Var& x);       // over the last axis
Var log_softmax(const Var& x);   // over the last axis

/// x: N×C×H×W, w: O×C×kh×kw, b: O (may be undefined). Zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride = 1, int pad = 0);
/// x: N×C×T×H×W, w: O×C×kt×kh×kw, b: O (may be undefined). Zero padding.
Var conv3d(const Var& x, const Var& w, const Var& b, std::array<int, 3> stride, std::array<int, 3> pad);

/// Nearest-neighbour upsampling of the last two axes by an integer factor.
Var upsample_nearest2d(const Var& x, int factor);
/// Replicate padding of the last two axes.
Var pad_replicate2d(const Var& x, int pad);

/// Bilinear sampling of img (N×C×H×W) at p + flow(p), flow N×2×H×W holding (u, v).
/// Neighbour indices are clamped to the frame, so out-of-range samples read the border.
Var flow_warp(const Var& img, const Var& flow);

}  // namespace voin::nn
