#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmlatent/scene.hpp"
#include "mmlatent/stage_text.hpp"
#include "mmlatent/vocab.hpp"

namespace mmlatent {

enum class QuestionFamily { counting, existence, majority };

const char* family_name(QuestionFamily f);

/// One task instance. With an image, the asked-about attribute appears only
/// in the image (the context is a constant scene description), so the gold
/// answer is underivable from text alone; without an image, the context
/// states the facts and fully determines the answer.
struct QASample {
    std::string id;
    std::optional<SceneSpec> scene;
    std::optional<Image> image;
    std::string context;                // X_L
    std::string question;               // X_Q
    std::vector<std::string> options;   // X_O, four choices
    std::string rationale;              // gold Y_R
    int answer_index = -1;              // gold Y_A as an option position
    bool has_image = false;
    QuestionFamily family = QuestionFamily::counting;

    std::string answer_text() const { return option_tag(answer_index); }
    StageInput stage_input() const;
};

/// Procedural generation: counting / 4-way existence / majority-color
/// questions over rendered shape grids, gold answers uniform over option
/// positions, ~p_imageless of samples text-only. Deterministic in the seed.
std::vector<QASample> gen_dataset(int n, std::uint64_t seed, double p_imageless);

/// Independent oracle: re-derives the gold answer for a with-image sample by
/// parsing the question/options and evaluating them against the SceneSpec.
/// Returns the option index.
int evaluate_against_scene(const QASample& sample);

/// The closed task vocabulary every model run uses (templates, attribute
/// words, numerals, option tags).
Vocab task_vocab();

/// samples.jsonl plus an images/ directory of PPM files. Byte-identical for
/// identical inputs.
void save_dataset(const std::string& dir, const std::vector<QASample>& samples);
std::vector<QASample> load_dataset(const std::string& dir);

}  // namespace mmlatent
