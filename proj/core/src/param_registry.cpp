#include "mmlatent/param_registry.hpp"

#include <algorithm>

#include "mmlatent/errors.hpp"

namespace mmlatent {

TensorPtr ParamRegistry::add(const std::string& name, const std::string& group, TensorPtr t) {
    if (by_name_.count(name))
        throw ConfigError("duplicate parameter name '" + name + "'");
    if (!t) throw ContractError("null parameter '" + name + "'");
    t->requires_grad = true;
    by_name_[name] = entries_.size();
    entries_.push_back({name, group, t});
    return t;
}

TensorPtr ParamRegistry::normal(const std::string& name, const std::string& group,
                                std::vector<std::int64_t> shape, double stddev, Prng& rng) {
    return add(name, group, tensor_randn(rng, std::move(shape), stddev, true));
}

TensorPtr ParamRegistry::zeros(const std::string& name, const std::string& group,
                               std::vector<std::int64_t> shape) {
    return add(name, group, tensor_zeros(std::move(shape), true));
}

TensorPtr ParamRegistry::full(const std::string& name, const std::string& group,
                              std::vector<std::int64_t> shape, double value) {
    return add(name, group, tensor_full(std::move(shape), value, true));
}

const TensorPtr& ParamRegistry::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].tensor;
}

std::vector<TensorPtr> ParamRegistry::tensors() const {
    std::vector<TensorPtr> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.tensor);
    return out;
}

std::vector<TensorPtr> ParamRegistry::group_tensors(const std::string& group) const {
    std::vector<TensorPtr> out;
    for (const auto& e : entries_)
        if (e.group == group) out.push_back(e.tensor);
    return out;
}

std::vector<std::string> ParamRegistry::groups() const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
    return out;
}

std::int64_t ParamRegistry::total_numel() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.tensor->numel();
    return n;
}

}  // namespace mmlatent
