#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mmlatent/model.hpp"
#include "mmlatent/optimizer.hpp"

namespace mmlatent {

/// One teacher-forced training example for a stage.
struct TrainExample {
    StageInput input;
    std::string target_text;
};

struct StepMetrics {
    std::int64_t step = 0;
    double loss_seq = 0.0;
    double loss_ldm = 0.0;
    double loss_total = 0.0;
    double lr = 0.0;
};

/// Owns one stage's training step: per-sample forward, gradient accumulation
/// scaled to the batch mean, one AdamW step. The noise stream (timesteps and
/// diffusion noise) is the trainer's; its state serializes for bitwise
/// resume.
class Trainer {
  public:
    Trainer(StageModel& model, Stage stage, AdamW& optimizer, std::uint64_t seed);

    StepMetrics train_step(const std::vector<const TrainExample*>& batch);

    Prng& noise_rng() { return noise_rng_; }

    nlohmann::json rng_state_json() const;
    void restore_rng_state(const nlohmann::json& j);

  private:
    StageModel& model_;
    Stage stage_;
    AdamW& optimizer_;
    Prng noise_rng_;
};

}  // namespace mmlatent
