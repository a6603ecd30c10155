#include "voin/nn/params.hpp"

#include "voin/core/error.hpp"

namespace voin::nn {

Var ParamStore::add(const std::string& name, Tensor init) {
    if (contains(name)) throw ParameterError("duplicate parameter name " + name);
    Var v(std::move(init), true);
    entries_.push_back({name, v});
    return v;
}

std::vector<Var> ParamStore::vars() const {
    std::vector<Var> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.var);
    return out;
}

Var ParamStore::get(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.var;
    }
    throw ParameterError("no parameter named " + name);
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

std::int64_t ParamStore::total_size() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.var.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.var.zero_grad();
}

}  // namespace voin::nn
