#pragma once

#include "mmlatent/latent.hpp"
#include "mmlatent/prng.hpp"
#include "mmlatent/schedule.hpp"

namespace mmlatent {

/// Closed-form forward diffusion at step t:
///   z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
/// Differentiable w.r.t. z0; eps is a fixed draw. Throws on t outside
/// [1, T] or an eps shape that differs from z0.
LatentGrid forward_diffuse(const LatentGrid& z0, int t, const TensorPtr& eps,
                           const NoiseSchedule& sched);

/// Uniform step draw from {1..T} (callers pass the dedicated noise stream).
int sample_timestep(Prng& rng, int T);

/// Standard-normal noise with the latent grid's shape.
TensorPtr noise_like(Prng& rng, const LatentGrid& z);

/// Mean squared error between true and predicted noise.
TensorPtr ldm_loss(const TensorPtr& eps, const TensorPtr& eps_hat);

}  // namespace mmlatent
