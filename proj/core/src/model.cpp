#include "mmlatent/model.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"

namespace mmlatent {

void ModelConfig::validate_and_align() {
    if (text.vocab_size <= 0) throw ConfigError("ModelConfig: vocab_size unset");
    fusion.latent_channels = vae.latent_channels;
    fusion.d_model = text.d_model;
    unet.latent_channels = vae.latent_channels;
    unet.latent_hw = vae.latent_hw();
    unet.text_dim = text.d_model;
    if (diffusion_steps < 1) throw ConfigError("ModelConfig: diffusion_steps must be >= 1");
    if (!(beta_start >= 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ConfigError("ModelConfig: need 0 <= beta_start <= beta_end < 1");
    if (max_rationale_len < 1 || max_answer_len < 1)
        throw ConfigError("ModelConfig: generation lengths must be >= 1");
}

TensorPtr total_loss(const TensorPtr& loss_seq, const TensorPtr& loss_ldm, double lambda_ldm) {
    if (!loss_seq) throw ContractError("total_loss: missing sequence loss");
    if (!std::isfinite(loss_seq->item()))
        throw NumericError("total_loss: L_SEQ is not finite");
    if (!loss_ldm) return loss_seq;
    if (!std::isfinite(loss_ldm->item()))
        throw NumericError("total_loss: L_LDM is not finite");
    return add(loss_seq, scale(loss_ldm, lambda_ldm));
}

StageModel::StageModel(const ModelConfig& cfg, const Vocab& vocab, std::uint64_t init_seed)
    : cfg_(cfg), vocab_(vocab) {
    cfg_.text.vocab_size = vocab_.size();
    cfg_.validate_and_align();
    Prng init = Prng::for_purpose(init_seed, "init");
    encoder_ = std::make_unique<TextEncoder>(cfg_.text, params_, "enc", init);
    decoder_ = std::make_unique<TextDecoder>(cfg_.text, params_, "dec", init);
    vae_ = std::make_unique<Vae>(cfg_.vae, params_, "vae", init);
    unet_ = std::make_unique<NoisePredictor>(cfg_.unet, params_, "unet", init);
    fusion_ = std::make_unique<FusionModule>(cfg_.fusion, params_, "fusion", init);
    schedule_ = std::make_unique<NoiseSchedule>(
        build_schedule(cfg_.diffusion_steps, cfg_.beta_start, cfg_.beta_end));
}

FusedState StageModel::fuse_for(const StageInput& si, Stage stage, const LatentGrid& latent) const {
    auto ids = vocab_.encode(build_stage_text(si, stage));
    auto enc = encoder_->encode(ids);
    return fusion_->fuse(enc.z, grid_to_sequence(latent));
}

StageModel::TrainForward StageModel::forward_train(const StageInput& si, Stage stage,
                                                   const std::vector<int>& target_ids,
                                                   Prng& noise_rng) {
    if (target_ids.size() < 2)
        throw ContractError("forward_train: target must contain at least [BOS, EOS]");

    auto z0 = vae_->make_latent(si.image, cfg_.imageless_policy, cfg_.vae_mode,
                                cfg_.vae_mode == EncodeMode::sample ? &noise_rng : nullptr);

    TrainForward out;
    LatentGrid fused_latent = z0;
    if (cfg_.enable_ldm) {
        auto ids = vocab_.encode(build_stage_text(si, stage));
        auto enc = encoder_->encode(ids);
        out.timestep = sample_timestep(noise_rng, schedule_->steps());
        auto eps = noise_like(noise_rng, z0);
        auto z_t = forward_diffuse(z0, out.timestep, eps, *schedule_);
        auto eps_hat = unet_->predict(z_t, out.timestep, enc.z);
        out.loss_ldm = ldm_loss(eps, eps_hat.z);
        if (cfg_.fuse_noised_latent) fused_latent = z_t;
        out.fused = fusion_->fuse(enc.z, grid_to_sequence(fused_latent));
    } else {
        out.fused = fuse_for(si, stage, fused_latent);
    }

    std::vector<int> dec_in(target_ids.begin(), target_ids.end() - 1);
    std::vector<int> dec_target(target_ids.begin() + 1, target_ids.end());
    auto logits = decoder_->forward_logits(dec_in, out.fused.z_fuse);
    out.loss_seq = seq_loss(logits, dec_target);
    out.loss_total = total_loss(out.loss_seq, out.loss_ldm, cfg_.lambda_ldm);
    return out;
}

FusedState StageModel::forward_inference(const StageInput& si, Stage stage) const {
    auto z0 = vae_->make_latent(si.image, cfg_.imageless_policy, cfg_.vae_mode, nullptr);
    return fuse_for(si, stage, z0);
}

std::string StageModel::generate(const StageInput& si, Stage stage) const {
    NoGradGuard ng;
    auto fused = forward_inference(si, stage);
    const int max_len =
        stage == Stage::rationale ? cfg_.max_rationale_len : cfg_.max_answer_len;
    return vocab_.decode(decoder_->greedy_generate(fused.z_fuse, max_len));
}

}  // namespace mmlatent
