#include "mmlatent/optimizer.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"

namespace mmlatent {

AdamW::AdamW(OptimizerConfig cfg, const ParamRegistry& reg, RoutingPolicy policy)
    : cfg_(cfg), reg_(reg), policy_(policy) {
    policy_.validate(reg_);
}

double AdamW::lr_at(std::int64_t step) const {
    if (cfg_.schedule == LrSchedule::constant || cfg_.total_steps <= 0) return cfg_.lr;
    const double frac =
        std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg_.total_steps));
    return cfg_.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void AdamW::step() {
    const double lr = lr_at(step_count_);
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);

    for (const auto& e : reg_.entries()) {
        if (!policy_.group_updatable(e.group)) continue;
        auto& p = *e.tensor;
        if (p.grad.empty()) continue;
        auto& slot = slots_[e.name];
        if (slot.m.empty()) {
            slot.m.assign(p.data.size(), 0.0);
            slot.v.assign(p.data.size(), 0.0);
        }
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double g = p.grad[i];
            slot.m[i] = quantize(cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g, p.dtype);
            slot.v[i] = quantize(cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g, p.dtype);
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            const double update = mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p.data[i];
            p.data[i] = quantize(p.data[i] - lr * update, p.dtype);
        }
    }
}

std::map<std::string, TensorPtr> AdamW::state_tensors() const {
    std::map<std::string, TensorPtr> out;
    for (const auto& [name, slot] : slots_) {
        const auto& p = reg_.find(name);
        auto m = std::make_shared<Tensor>();
        m->shape = p->shape;
        m->dtype = p->dtype;
        m->data = slot.m;
        out["optim.m." + name] = m;
        auto v = std::make_shared<Tensor>();
        v->shape = p->shape;
        v->dtype = p->dtype;
        v->data = slot.v;
        out["optim.v." + name] = v;
    }
    return out;
}

void AdamW::restore_state(const std::map<std::string, TensorPtr>& tensors) {
    slots_.clear();
    for (const auto& [name, t] : tensors) {
        const bool is_m = name.rfind("optim.m.", 0) == 0;
        const bool is_v = name.rfind("optim.v.", 0) == 0;
        if (!is_m && !is_v) continue;
        const std::string param = name.substr(8);
        const auto& p = reg_.find(param);
        if (t->shape != p->shape)
            throw IoError("optimizer state '" + name + "' has shape " + t->shape_str() +
                          ", parameter has " + p->shape_str());
        auto& slot = slots_[param];
        if (slot.m.empty()) {
            slot.m.assign(p->data.size(), 0.0);
            slot.v.assign(p->data.size(), 0.0);
        }
        (is_m ? slot.m : slot.v) = t->data;
    }
}

}  // namespace mmlatent
