#include "mmlatent/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "mmlatent/errors.hpp"
#include "mmlatent/tensor_io.hpp"

namespace mmlatent {

namespace fs = std::filesystem;
using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
    json j;
    j["text"] = {{"vocab_size", cfg.text.vocab_size},
                 {"d_model", cfg.text.d_model},
                 {"n_heads", cfg.text.n_heads},
                 {"n_enc_layers", cfg.text.n_enc_layers},
                 {"n_dec_layers", cfg.text.n_dec_layers},
                 {"d_ffn", cfg.text.d_ffn},
                 {"max_input_len", cfg.text.max_input_len}};
    j["vae"] = {{"image_size", cfg.vae.image_size},
                {"image_channels", cfg.vae.image_channels},
                {"latent_channels", cfg.vae.latent_channels},
                {"hidden1", cfg.vae.hidden1},
                {"hidden2", cfg.vae.hidden2},
                {"eta", cfg.vae.eta}};
    j["unet"] = {{"ch1", cfg.unet.ch1},
                 {"ch2", cfg.unet.ch2},
                 {"attn_dim", cfg.unet.attn_dim},
                 {"time_dim", cfg.unet.time_dim}};
    j["fusion"] = {{"gate_bias", cfg.fusion.gate_bias},
                   {"learned_qkv", cfg.fusion.learned_qkv},
                   {"n_heads", cfg.fusion.n_heads}};
    j["diffusion_steps"] = cfg.diffusion_steps;
    j["beta_start"] = cfg.beta_start;
    j["beta_end"] = cfg.beta_end;
    j["lambda_ldm"] = cfg.lambda_ldm;
    j["enable_ldm"] = cfg.enable_ldm;
    j["fuse_noised_latent"] = cfg.fuse_noised_latent;
    j["imageless_policy"] = imageless_policy_name(cfg.imageless_policy);
    j["vae_mode"] = cfg.vae_mode == EncodeMode::mean ? "mean" : "sample";
    j["max_rationale_len"] = cfg.max_rationale_len;
    j["max_answer_len"] = cfg.max_answer_len;
    return j;
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    try {
        const auto& t = j.at("text");
        cfg.text.vocab_size = t.at("vocab_size").get<int>();
        cfg.text.d_model = t.at("d_model").get<int>();
        cfg.text.n_heads = t.at("n_heads").get<int>();
        cfg.text.n_enc_layers = t.at("n_enc_layers").get<int>();
        cfg.text.n_dec_layers = t.at("n_dec_layers").get<int>();
        cfg.text.d_ffn = t.at("d_ffn").get<int>();
        cfg.text.max_input_len = t.at("max_input_len").get<int>();
        const auto& v = j.at("vae");
        cfg.vae.image_size = v.at("image_size").get<int>();
        cfg.vae.image_channels = v.at("image_channels").get<int>();
        cfg.vae.latent_channels = v.at("latent_channels").get<int>();
        cfg.vae.hidden1 = v.at("hidden1").get<int>();
        cfg.vae.hidden2 = v.at("hidden2").get<int>();
        cfg.vae.eta = v.at("eta").get<double>();
        const auto& u = j.at("unet");
        cfg.unet.ch1 = u.at("ch1").get<int>();
        cfg.unet.ch2 = u.at("ch2").get<int>();
        cfg.unet.attn_dim = u.at("attn_dim").get<int>();
        cfg.unet.time_dim = u.at("time_dim").get<int>();
        const auto& f = j.at("fusion");
        cfg.fusion.gate_bias = f.at("gate_bias").get<bool>();
        cfg.fusion.learned_qkv = f.at("learned_qkv").get<bool>();
        cfg.fusion.n_heads = f.at("n_heads").get<int>();
        cfg.diffusion_steps = j.at("diffusion_steps").get<int>();
        cfg.beta_start = j.at("beta_start").get<double>();
        cfg.beta_end = j.at("beta_end").get<double>();
        cfg.lambda_ldm = j.at("lambda_ldm").get<double>();
        cfg.enable_ldm = j.at("enable_ldm").get<bool>();
        cfg.fuse_noised_latent = j.at("fuse_noised_latent").get<bool>();
        cfg.imageless_policy = imageless_policy_from_name(j.at("imageless_policy").get<std::string>());
        cfg.vae_mode = j.at("vae_mode").get<std::string>() == "sample" ? EncodeMode::sample
                                                                       : EncodeMode::mean;
        cfg.max_rationale_len = j.at("max_rationale_len").get<int>();
        cfg.max_answer_len = j.at("max_answer_len").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model config json: ") + e.what());
    }
    return cfg;
}

void save_checkpoint(const std::string& dir, const StageModel& model, const AdamW* optimizer,
                     const json& experiment_snapshot, const json& run_state,
                     std::uint64_t init_seed) {
    fs::create_directories(dir);

    std::map<std::string, TensorPtr> named;
    for (const auto& e : model.params().entries()) named[e.name] = e.tensor;
    if (optimizer) {
        for (auto& [name, t] : optimizer->state_tensors()) named[name] = t;
    }
    save_tensors(dir, named);

    json cfg;
    cfg["model"] = model_config_to_json(model.config());
    cfg["init_seed"] = init_seed;
    cfg["experiment"] = experiment_snapshot;
    if (optimizer) cfg["optimizer_step"] = optimizer->step_count();
    std::ofstream cf(fs::path(dir) / "config.json");
    if (!cf) throw IoError("save_checkpoint: cannot write config.json in " + dir);
    cf << cfg.dump(2) << '\n';

    std::ofstream rf(fs::path(dir) / "rng.json");
    if (!rf) throw IoError("save_checkpoint: cannot write rng.json in " + dir);
    rf << run_state.dump(2) << '\n';

    model.vocab().save((fs::path(dir) / "vocab.txt").string());
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
    std::ifstream cf(fs::path(dir) / "config.json");
    if (!cf) throw IoError("load_checkpoint: missing config.json in " + dir);
    json cfg;
    try {
        cf >> cfg;
    } catch (const json::exception& e) {
        throw IoError(std::string("load_checkpoint: corrupt config.json: ") + e.what());
    }

    LoadedCheckpoint out;
    out.config = cfg;
    auto vocab = Vocab::load((fs::path(dir) / "vocab.txt").string());
    auto model_cfg = model_config_from_json(cfg.at("model"));
    const std::uint64_t init_seed = cfg.value("init_seed", 0ULL);
    out.model = std::make_unique<StageModel>(model_cfg, vocab, init_seed);

    auto tensors = load_tensors(dir);
    for (const auto& e : out.model->params().entries()) {
        auto it = tensors.find(e.name);
        if (it == tensors.end())
            throw ConfigError("load_checkpoint: parameter '" + e.name +
                              "' missing from checkpoint " + dir);
        if (it->second->shape != e.tensor->shape || it->second->dtype != e.tensor->dtype)
            throw ConfigError("load_checkpoint: parameter '" + e.name +
                              "' disagrees with the configured model");
        e.tensor->data = it->second->data;
    }
    for (auto& [name, t] : tensors) {
        if (name.rfind("optim.", 0) == 0) {
            out.optimizer_state[name] = t;
        } else if (!out.model->params().contains(name)) {
            throw ConfigError("load_checkpoint: unexpected tensor '" + name + "' in " + dir);
        }
    }

    std::ifstream rf(fs::path(dir) / "rng.json");
    if (!rf) throw IoError("load_checkpoint: missing rng.json in " + dir);
    try {
        rf >> out.run_state;
    } catch (const json::exception& e) {
        throw IoError(std::string("load_checkpoint: corrupt rng.json: ") + e.what());
    }
    return out;
}

}  // namespace mmlatent
