#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmlatent/param_registry.hpp"
#include "mmlatent/routing.hpp"

namespace mmlatent {

enum class LrSchedule { constant, cosine };

struct OptimizerConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    LrSchedule schedule = LrSchedule::cosine;
    std::int64_t total_steps = 0;  // cosine horizon; 0 degrades to constant
};

/// AdamW with decoupled weight decay over the parameter registry. A step
/// updates only parameters whose grad was populated by the backward pass and
/// whose group the routing policy marks updatable, so frozen groups stay
/// bitwise unchanged. Moments are created lazily and serialize with the
/// checkpoint for bitwise resume.
class AdamW {
  public:
    AdamW(OptimizerConfig cfg, const ParamRegistry& reg, RoutingPolicy policy);

    void step();

    double lr_at(std::int64_t step) const;
    double current_lr() const { return lr_at(step_count_); }
    std::int64_t step_count() const { return step_count_; }
    void set_step_count(std::int64_t n) { step_count_ = n; }

    const OptimizerConfig& config() const { return cfg_; }
    const RoutingPolicy& policy() const { return policy_; }

    /// Moment buffers as named tensors ("optim.m.<param>", "optim.v.<param>")
    /// for checkpointing; restore is the inverse.
    std::map<std::string, TensorPtr> state_tensors() const;
    void restore_state(const std::map<std::string, TensorPtr>& tensors);

  private:
    struct Slot {
        std::vector<double> m, v;
    };
    OptimizerConfig cfg_;
    const ParamRegistry& reg_;
    RoutingPolicy policy_;
    std::map<std::string, Slot> slots_;
    std::int64_t step_count_ = 0;
};

}  // namespace mmlatent
