#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mmlatent/dataset.hpp"
#include "mmlatent/model.hpp"
#include "mmlatent/optimizer.hpp"

namespace mmlatent {

/// Everything that determines a run. Serialized into every metrics file and
/// checkpoint; the hash (optionally with eta masked) asserts that sweep runs
/// differ only where intended.
struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::string dtype = "f32";

    // model dims
    int d_model = 64;
    int n_heads = 4;
    int enc_layers = 2;
    int dec_layers = 2;
    int d_ffn = 256;
    int max_input_len = 512;
    int image_size = 32;
    int latent_channels = 4;
    int vae_hidden1 = 16;
    int vae_hidden2 = 32;
    int unet_ch1 = 8;
    int unet_ch2 = 16;
    int unet_attn_dim = 32;
    int unet_time_dim = 16;

    // diffusion
    int diffusion_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double eta = 0.18215;
    double lambda_ldm = 1.0;
    bool enable_ldm = true;
    bool fuse_noised_latent = false;

    // fusion
    bool gate_bias = true;
    bool learned_qkv = false;
    int fusion_heads = 1;

    // policies
    bool freeze_unet = false;
    bool freeze_vae = false;
    std::string imageless_policy = "zero_tensor";
    bool text_only = false;  // force zero latents for every sample

    // data
    int n_train = 2000;
    int n_val = 500;
    int n_test = 500;
    double p_imageless = 0.2;

    // training
    int epochs = 20;
    double lr = 5e-5;
    int batch_size = 8;
    double weight_decay = 0.01;
    std::string lr_schedule = "cosine";
    int max_rationale_len = 512;
    int max_answer_len = 64;
    bool vae_recon_pretrain = false;
    int recon_epochs = 2;
    int log_every = 25;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load_file(const std::string& path);

    ModelConfig model_config() const;
    OptimizerConfig optimizer_config(std::int64_t total_steps) const;
    RoutingPolicy routing() const;

    /// FNV-1a over the canonical JSON dump; mask_eta zeroes eta first.
    std::uint64_t config_hash(bool mask_eta = false) const;
};

struct EvalResult {
    double accuracy_all = 0.0;
    double accuracy_image = 0.0;     // with-image test samples only
    double accuracy_textless = 0.0;  // image-less test samples
    double rouge_f1 = 0.0;           // stage-1 rationale vs gold
    int n = 0;
    int n_image = 0;
    double unmatched_rate = 0.0;  // answers that matched no option

    nlohmann::json to_json() const;
};

/// CLI `gen-data`: procedural pool written as samples.jsonl + images/.
void write_dataset(const std::string& out_dir, int n, std::uint64_t seed, double p_imageless);

/// CLI `train`: trains both stages on the data pool's train slice, writes
/// metrics.jsonl, stage1/ and stage2/ checkpoints, summary.json, and
/// evaluates on the test slice.
EvalResult run_training(const ExperimentConfig& cfg, const std::string& data_dir,
                        const std::string& out_dir);

/// CLI `eval`: evaluates saved stage checkpoints on the test slice.
EvalResult evaluate_checkpoints(const std::string& checkpoints_dir, const std::string& data_dir,
                                const std::string& out_dir);

enum class AblationVariant { full, random_init, no_unet, frozen_vae, text_only, blank_image };

const char* variant_name(AblationVariant v);
AblationVariant variant_from_name(const std::string& name);
std::vector<AblationVariant> all_variants();

/// The variant's config delta on top of a base run configuration.
ExperimentConfig apply_variant(ExperimentConfig base, AblationVariant v);

/// CLI `ablate`: one training+eval run per variant (optionally in parallel
/// threads), one summary.csv row per variant.
void run_ablation(const ExperimentConfig& base, const std::vector<AblationVariant>& variants,
                  const std::string& data_dir, const std::string& out_dir, int jobs = 1);

/// CLI `sweep-eta`: six runs over eta in {0.15215 .. 0.20215}, identical in
/// every other respect (asserted via masked config hashes); emits
/// sweep.csv with (eta, accuracy, rouge_l) rows.
void sweep_eta(const ExperimentConfig& base, const std::string& data_dir,
               const std::string& out_dir, int jobs = 1);

}  // namespace mmlatent
