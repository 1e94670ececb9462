#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmlatent/image.hpp"

namespace mmlatent {

enum class Stage { rationale, answer };

const char* stage_name(Stage s);

/// One model invocation's raw inputs: language context, question, labeled
/// options, the stage-1 rationale (answer stage only), and an optional image.
struct StageInput {
    std::string context;                   // X_L
    std::string question;                  // X_Q
    std::vector<std::string> options;      // X_O; labels A.. follow the order
    std::optional<std::string> rationale;  // generated or gold rationale
    std::optional<Image> image;            // X_V
};

char option_label(int index);       // 'A' + index
std::string option_tag(int index);  // "(A)", "(B)", ...

/// Exact stage templates.
///   rationale: "context: {X_L} question: {X_Q} options: (A) {o1} (B) {o2}
///              ... rationale:"
///   answer:    the rationale template + " solution: {rationale} answer:"
/// Throws ContractError when the rationale presence disagrees with the stage
/// or options are empty.
std::string build_stage_text(const StageInput& si, Stage stage);

}  // namespace mmlatent
