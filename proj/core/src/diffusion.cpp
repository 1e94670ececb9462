#include "mmlatent/diffusion.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"

namespace mmlatent {

LatentGrid forward_diffuse(const LatentGrid& z0, int t, const TensorPtr& eps,
                           const NoiseSchedule& sched) {
    if (!z0.z || !eps) throw ContractError("forward_diffuse: null input");
    if (eps->shape != z0.z->shape)
        throw ShapeError("forward_diffuse: noise " + eps->shape_str() + " vs latent " +
                         z0.z->shape_str());
    const double abar = sched.alpha_bar_at(t);
    return LatentGrid{
        add(scale(z0.z, std::sqrt(abar)), scale(eps, std::sqrt(1.0 - abar)))};
}

int sample_timestep(Prng& rng, int T) {
    if (T < 1) throw ContractError("sample_timestep: T must be >= 1");
    return static_cast<int>(rng.uniform_int(1, T));
}

TensorPtr noise_like(Prng& rng, const LatentGrid& z) {
    if (!z.z) throw ContractError("noise_like: null latent");
    return tensor_randn(rng, z.z->shape, 1.0, false);
}

TensorPtr ldm_loss(const TensorPtr& eps, const TensorPtr& eps_hat) {
    return mse(eps_hat, eps);
}

}  // namespace mmlatent
