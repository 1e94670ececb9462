#include "mmlatent/stage_text.hpp"

#include "mmlatent/errors.hpp"

namespace mmlatent {

const char* stage_name(Stage s) { return s == Stage::rationale ? "rationale" : "answer"; }

char option_label(int index) {
    if (index < 0 || index > 25) throw ContractError("option index out of range");
    return static_cast<char>('A' + index);
}

std::string option_tag(int index) { return std::string("(") + option_label(index) + ")"; }

std::string build_stage_text(const StageInput& si, Stage stage) {
    if (si.options.empty()) throw ContractError("build_stage_text: options must be non-empty");
    if (stage == Stage::answer && !si.rationale.has_value())
        throw ContractError("build_stage_text: answer stage needs a rationale");
    if (stage == Stage::rationale && si.rationale.has_value())
        throw ContractError("build_stage_text: rationale stage must not carry a rationale");

    std::string text = "context: " + si.context + " question: " + si.question + " options:";
    for (std::size_t i = 0; i < si.options.size(); ++i)
        text += " " + option_tag(static_cast<int>(i)) + " " + si.options[i];
    text += " rationale:";
    if (stage == Stage::answer) text += " solution: " + *si.rationale + " answer:";
    return text;
}

}  // namespace mmlatent
