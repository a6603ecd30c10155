#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voin/nn/autograd.hpp"

namespace voin::nn {

struct NamedParam {
    std::string name;
    Var var;
};

/// Ordered registry of the trainable arrays of one model.
class ParamStore {
public:
    /// Registers a leaf that requires grad. Names must be unique.
    Var add(const std::string& name, Tensor init);

    const std::vector<NamedParam>& entries() const { return entries_; }
    std::vector<Var> vars() const;
    Var get(const std::string& name) const;
    bool contains(const std::string& name) const;
    /// Total number of scalar parameters.
    std::int64_t total_size() const;
    void zero_grad();

private:
    std::vector<NamedParam> entries_;
};

}  // namespace voin::nn
