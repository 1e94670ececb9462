#include "mmlatent/routing.hpp"

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {
const std::set<std::string> kKnownGroups = {"text_encoder", "text_decoder", "vae", "unet",
                                            "fusion"};
}

std::set<std::string> RoutingPolicy::losses_for(const std::string& group) const {
    if (group == "text_encoder" || group == "vae") return {"seq", "ldm"};
    if (group == "fusion" || group == "text_decoder") return {"seq"};
    if (group == "unet") return freeze_unet ? std::set<std::string>{} : std::set<std::string>{"ldm"};
    throw ConfigError("routing: unknown parameter group '" + group + "'");
}

bool RoutingPolicy::group_updatable(const std::string& group) const {
    if (group == "unet") return !freeze_unet;
    if (group == "vae") return !freeze_vae;
    if (kKnownGroups.count(group)) return true;
    throw ConfigError("routing: unknown parameter group '" + group + "'");
}

void RoutingPolicy::validate(const ParamRegistry& reg) const {
    for (const auto& e : reg.entries())
        if (!kKnownGroups.count(e.group))
            throw ConfigError("routing: parameter '" + e.name + "' registered under unknown group '" +
                              e.group + "'");
}

}  // namespace mmlatent
