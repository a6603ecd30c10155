#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "voin/nn/tensor.hpp"

namespace voin::nn {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    /// grad += g, allocating zeros on first use.
    void accumulate(const Tensor& g);
    Tensor& grad_buffer();
};

/// Handle to a node of the reverse-mode graph. Copies share the node.
class Var {
public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    /// Direct write access; used by optimizers and checkpoint loading.
    Tensor& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::int64_t dim(int axis) const { return node_->value.dim(axis); }
    std::int64_t numel() const { return node_->value.numel(); }
    double item() const { return node_->value.item(); }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    /// Gradient, or zeros of the value's shape if none accumulated.
    Tensor grad() const;
    void zero_grad();

    /// Seeds d(this)/d(this) = 1 and runs reverse accumulation. Scalar only.
    void backward() const;

    /// Same value, cut from the graph.
    Var detach() const { return Var(node_->value, false); }

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
    friend Var make_result(Tensor, const std::vector<Var>&, std::function<void(Node&)>);
};

/// Builds an op result. When no parent requires grad (or grad mode is off)
/// the result is a constant and `backward_fn` is dropped. The callback reads
/// self.grad and accumulates into self.parents[i] where requires_grad holds.
Var make_result(Tensor value, const std::vector<Var>& parents, std::function<void(Node&)> backward_fn);

bool grad_enabled();

/// Disables graph recording for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

inline Var constant(Tensor t) { return Var(std::move(t), false); }

}  // namespace voin::nn
