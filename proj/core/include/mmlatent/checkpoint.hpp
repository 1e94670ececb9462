#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "mmlatent/model.hpp"
#include "mmlatent/optimizer.hpp"

namespace mmlatent {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Checkpoint directory layout:
///   manifest.json + weights.bin   all parameters plus optimizer moments
///   config.json                   model config, init seed, experiment snapshot
///   rng.json                      RNG stream states and trainer counters
///   vocab.txt                     the vocabulary, one token per line
void save_checkpoint(const std::string& dir, const StageModel& model, const AdamW* optimizer,
                     const nlohmann::json& experiment_snapshot, const nlohmann::json& run_state,
                     std::uint64_t init_seed);

struct LoadedCheckpoint {
    std::unique_ptr<StageModel> model;
    nlohmann::json config;     // full config.json content
    nlohmann::json run_state;  // rng.json content
    std::map<std::string, TensorPtr> optimizer_state;
};

/// Rebuilds the model from config.json + vocab.txt and restores every weight
/// bit-exactly. Throws IoError/ConfigError on structural mismatch.
LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace mmlatent
