#pragma once

#include <map>
#include <set>
#include <string>

#include "mmlatent/param_registry.hpp"

namespace mmlatent {

/// Which loss terms may update which parameter group. The graph already
/// routes gradients structurally (the diffusion branch never touches fusion
/// or decoder parameters, the sequence branch never touches the UNet); this
/// policy is the explicit contract the optimizer enforces on top: frozen
/// groups receive no update at all, gradients may still flow through them.
struct RoutingPolicy {
    bool freeze_unet = false;
    bool freeze_vae = false;

    static RoutingPolicy defaults() { return {}; }

    /// Loss terms that update a group under this policy.
    std::set<std::string> losses_for(const std::string& group) const;

    bool group_updatable(const std::string& group) const;

    /// Startup check: every registered parameter belongs to a known group.
    /// Throws ConfigError otherwise (never mid-training).
    void validate(const ParamRegistry& reg) const;
};

}  // namespace mmlatent
