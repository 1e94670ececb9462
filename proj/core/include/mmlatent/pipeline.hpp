#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmlatent/model.hpp"

namespace mmlatent {

struct AnswerMatch {
    int index = -1;
    bool matched = false;
};

/// Maps free-form decoded text onto an option: exact normalized match first,
/// then a label tag/letter ("(b)" or "b"), then highest token overlap with
/// the option texts (ties to the lowest index). No overlap at all leaves the
/// result unmatched; callers score it as incorrect rather than failing.
AnswerMatch match_answer(const std::string& decoded, const std::vector<std::string>& options);

struct TwoStageResult {
    std::string rationale;
    std::string answer_text;
    AnswerMatch answer;
};

/// The two-stage chain: stage 1 greedily generates the rationale from
/// (context, question, options, image); stage 2 consumes the same inputs
/// plus that rationale verbatim and produces the answer. Passing
/// `oracle_rationale` replaces the stage-1 output (teacher-forced
/// evaluation); stage 2 never reads gold rationales otherwise.
TwoStageResult run_two_stage(const StageModel& stage1, const StageModel& stage2,
                             const StageInput& base,
                             const std::optional<std::string>& oracle_rationale = std::nullopt);

}  // namespace mmlatent
