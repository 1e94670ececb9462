#pragma once

#include <string>

#include "mmlatent/latent.hpp"
#include "mmlatent/param_registry.hpp"

namespace mmlatent {

struct UnetConfig {
    int latent_channels = 4;  // c_z
    int latent_hw = 8;        // grid side
    int ch1 = 8;              // width after the first down stage (and the lift)
    int ch2 = 16;             // width at the bottleneck
    int attn_dim = 32;        // cross-attention width
    int time_dim = 16;        // sinusoidal timestep embedding size
    int text_dim = 64;        // d_model of the conditioning text
};

/// Toy UNet noise predictor: lift, two stride-2 down stages, a middle block
/// whose cross-attention queries come from the latent pathway and whose
/// keys/values come from the text representation (residual +Q, then FFN),
/// and two up stages with symmetric skip connections. The timestep enters
/// every latent-path block as a projected sinusoidal embedding.
class NoisePredictor {
  public:
    NoisePredictor(const UnetConfig& cfg, ParamRegistry& reg, const std::string& prefix,
                   Prng& rng);

    /// eps_hat with z_t's shape. Throws ContractError on a missing/empty
    /// text representation.
    LatentGrid predict(const LatentGrid& z_t, int t, const TensorPtr& z_text) const;

    const UnetConfig& config() const { return cfg_; }

  private:
    TensorPtr time_embedding(int t) const;

    UnetConfig cfg_;
    TensorPtr lift_w_, lift_t_;
    TensorPtr down1_w_, down1_b_, down1_t_;
    TensorPtr down2_w_, down2_b_, down2_t_;
    TensorPtr attn_wq_, attn_wk_, attn_wv_;
    TensorPtr mid_w1_, mid_b1_, mid_w2_, mid_b2_;
    TensorPtr up1_w_, up1_b_, up1_mix_w_, up1_mix_b_, up1_t_;
    TensorPtr up2_w_, up2_b_, up2_mix_w_, up2_mix_b_, up2_t_;
    TensorPtr out_w_, out_b_;
};

}  // namespace mmlatent
