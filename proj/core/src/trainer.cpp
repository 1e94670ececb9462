#include "mmlatent/trainer.hpp"

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"

namespace mmlatent {

using nlohmann::json;

Trainer::Trainer(StageModel& model, Stage stage, AdamW& optimizer, std::uint64_t seed)
    : model_(model), stage_(stage), optimizer_(optimizer),
      noise_rng_(Prng::for_purpose(seed, "noise")) {}

StepMetrics Trainer::train_step(const std::vector<const TrainExample*>& batch) {
    if (batch.empty()) throw ContractError("train_step: empty batch");
    zero_grads(model_.params().tensors());

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    StepMetrics m;
    for (const TrainExample* ex : batch) {
        auto target_ids = model_.vocab().encode(ex->target_text);
        auto fwd = model_.forward_train(ex->input, stage_, target_ids, noise_rng_);
        m.loss_seq += fwd.loss_seq->item() * inv_b;
        if (fwd.loss_ldm) m.loss_ldm += fwd.loss_ldm->item() * inv_b;
        m.loss_total += fwd.loss_total->item() * inv_b;
        backward(scale(fwd.loss_total, inv_b));
    }
    m.lr = optimizer_.current_lr();
    optimizer_.step();
    m.step = optimizer_.step_count();
    return m;
}

json Trainer::rng_state_json() const {
    const auto st = noise_rng_.state();
    json j;
    j["s"] = st.s;
    j["has_spare_normal"] = st.has_spare_normal;
    j["spare_normal"] = st.spare_normal;
    return j;
}

void Trainer::restore_rng_state(const json& j) {
    Prng::State st;
    try {
        auto words = j.at("s").get<std::vector<std::uint64_t>>();
        if (words.size() != 4) throw IoError("trainer rng state: need 4 state words");
        std::copy(words.begin(), words.end(), st.s.begin());
        st.has_spare_normal = j.at("has_spare_normal").get<bool>();
        st.spare_normal = j.at("spare_normal").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("trainer rng state: ") + e.what());
    }
    noise_rng_.set_state(st);
}

}  // namespace mmlatent
