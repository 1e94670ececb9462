#pragma once

#include <optional>
#include <string>

#include "mmlatent/image.hpp"
#include "mmlatent/latent.hpp"
#include "mmlatent/param_registry.hpp"

namespace mmlatent {

struct VaeConfig {
    int image_size = 32;
    int image_channels = 3;
    int latent_channels = 4;  // c_z
    int hidden1 = 16;
    int hidden2 = 32;
    double eta = 0.18215;  // latent scale factor

    int latent_hw() const { return image_size / 4; }  // two stride-2 stages
};

enum class EncodeMode { mean, sample };

/// How questions without an image enter the latent pathway.
enum class ImagelessPolicy { zero_tensor, blank_image };

const char* imageless_policy_name(ImagelessPolicy p);
ImagelessPolicy imageless_policy_from_name(const std::string& name);

/// Patchwise VAE over small images: two stride-2 stages of linear patch
/// mixing + tanh in the encoder, mirrored in the decoder. The encoder
/// carries no bias anywhere, so an all-zero image maps to the all-zero
/// latent; the final projection emits posterior mean and log-variance.
/// Encode scales by eta; decode divides by eta before its own layers.
class Vae {
  public:
    Vae(const VaeConfig& cfg, ParamRegistry& reg, const std::string& prefix, Prng& rng);

    /// EncodeMode::sample draws a reparameterized latent and needs `rng`.
    LatentGrid encode(const Image& img, EncodeMode mode = EncodeMode::mean,
                      Prng* rng = nullptr) const;

    /// Reconstruction diagnostics; output clamped to [0,1].
    Image decode(const LatentGrid& z) const;

    /// Latent for a possibly-absent image: zero_tensor yields the all-zero
    /// grid, blank_image encodes an all-ones white image.
    LatentGrid make_latent(const std::optional<Image>& img, ImagelessPolicy policy,
                           EncodeMode mode = EncodeMode::mean, Prng* rng = nullptr) const;

    /// decode(encode(img)) squared error against the input; used by the
    /// optional reconstruction pretraining flag.
    TensorPtr reconstruction_loss(const Image& img) const;

    const VaeConfig& config() const { return cfg_; }

  private:
    TensorPtr encode_rows(const Image& img, EncodeMode mode, Prng* rng) const;

    VaeConfig cfg_;
    TensorPtr enc_w1_, enc_w2_, enc_wout_;        // bias-free encoder
    TensorPtr dec_w1_, dec_b1_, dec_w2_, dec_b2_;  // decoder
};

}  // namespace mmlatent
