#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mmlatent/prng.hpp"
#include "mmlatent/tensor.hpp"

namespace mmlatent {

struct ParamEntry {
    std::string name;
    std::string group;
    TensorPtr tensor;
};

/// Flat name -> parameter table. Every trainable tensor is registered here
/// exactly once under a routing group ("text_encoder", "text_decoder",
/// "vae", "unet", "fusion"); the optimizer, checkpointing and the routing
/// policy all operate on this table.
class ParamRegistry {
  public:
    TensorPtr add(const std::string& name, const std::string& group, TensorPtr t);

    TensorPtr normal(const std::string& name, const std::string& group,
                     std::vector<std::int64_t> shape, double stddev, Prng& rng);
    TensorPtr zeros(const std::string& name, const std::string& group,
                    std::vector<std::int64_t> shape);
    TensorPtr full(const std::string& name, const std::string& group,
                   std::vector<std::int64_t> shape, double value);

    const TensorPtr& find(const std::string& name) const;
    bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<TensorPtr> tensors() const;
    std::vector<TensorPtr> group_tensors(const std::string& group) const;
    std::vector<std::string> groups() const;

    std::int64_t total_numel() const;
    std::size_t size() const { return entries_.size(); }

  private:
    std::vector<ParamEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace mmlatent
