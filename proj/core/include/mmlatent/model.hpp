#pragma once

#include <memory>
#include <optional>
#include <string>

#include "mmlatent/diffusion.hpp"
#include "mmlatent/fusion.hpp"
#include "mmlatent/schedule.hpp"
#include "mmlatent/stage_text.hpp"
#include "mmlatent/text_model.hpp"
#include "mmlatent/unet.hpp"
#include "mmlatent/vae.hpp"

namespace mmlatent {

/// Full stage-model configuration; validate() aligns the derived widths.
struct ModelConfig {
    TextModelConfig text;
    VaeConfig vae;
    UnetConfig unet;
    FusionConfig fusion;

    int diffusion_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double lambda_ldm = 1.0;
    bool enable_ldm = true;            // the no-UNet ablation turns this off
    bool fuse_noised_latent = false;   // study flag: fuse z_t instead of z0
    ImagelessPolicy imageless_policy = ImagelessPolicy::zero_tensor;
    EncodeMode vae_mode = EncodeMode::mean;
    int max_rationale_len = 512;
    int max_answer_len = 64;

    void validate_and_align();
};

/// L_total = L_SEQ + lambda * L_LDM. Throws NumericError naming the term
/// that went non-finite.
TensorPtr total_loss(const TensorPtr& loss_seq, const TensorPtr& loss_ldm,
                     double lambda_ldm = 1.0);

/// One stage's full model: text encoder/decoder, VAE, UNet, fusion, and the
/// noise schedule, with every parameter registered for routing/checkpoints.
class StageModel {
  public:
    StageModel(const ModelConfig& cfg, const Vocab& vocab, std::uint64_t init_seed);

    struct TrainForward {
        TensorPtr loss_seq;
        TensorPtr loss_ldm;  // null when the diffusion branch is disabled
        TensorPtr loss_total;
        FusedState fused;
        int timestep = 0;
    };

    /// Training pass per the two-stage recipe: encode text, build the clean
    /// latent, fuse, draw (t, eps) for the diffusion branch, and decode the
    /// target under teacher forcing. `target_ids` is the [BOS ... EOS]
    /// encoding of the gold text.
    TrainForward forward_train(const StageInput& si, Stage stage,
                               const std::vector<int>& target_ids, Prng& noise_rng);

    /// Inference-mode stage forward: the latent is fused directly with the
    /// text representation; the diffusion branch is never touched.
    FusedState forward_inference(const StageInput& si, Stage stage) const;

    /// Greedy decode of one stage (length capped by the stage's configured
    /// maximum).
    std::string generate(const StageInput& si, Stage stage) const;

    ParamRegistry& params() { return params_; }
    const ParamRegistry& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }
    const Vocab& vocab() const { return vocab_; }
    NoiseSchedule& schedule() { return *schedule_; }
    const NoiseSchedule& schedule() const { return *schedule_; }

    const TextEncoder& encoder() const { return *encoder_; }
    const TextDecoder& decoder() const { return *decoder_; }
    const Vae& vae() const { return *vae_; }
    const NoisePredictor& unet() const { return *unet_; }
    const FusionModule& fusion() const { return *fusion_; }

  private:
    FusedState fuse_for(const StageInput& si, Stage stage, const LatentGrid& latent) const;

    ModelConfig cfg_;
    Vocab vocab_;
    ParamRegistry params_;
    std::unique_ptr<TextEncoder> encoder_;
    std::unique_ptr<TextDecoder> decoder_;
    std::unique_ptr<Vae> vae_;
    std::unique_ptr<NoisePredictor> unet_;
    std::unique_ptr<FusionModule> fusion_;
    std::unique_ptr<NoiseSchedule> schedule_;
};

}  // namespace mmlatent
