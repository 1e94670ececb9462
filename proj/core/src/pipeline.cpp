#include "mmlatent/pipeline.hpp"

#include <algorithm>

#include "mmlatent/errors.hpp"
#include "mmlatent/vocab.hpp"

namespace mmlatent {

namespace {

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

AnswerMatch match_answer(const std::string& decoded, const std::vector<std::string>& options) {
    if (options.empty()) throw ContractError("match_answer: empty option list");
    const auto decoded_words = Vocab::split_words(decoded);
    const std::string normalized = join(decoded_words);

    // 1. exact match against an option's normalized text
    for (std::size_t i = 0; i < options.size(); ++i)
        if (!normalized.empty() && normalized == join(Vocab::split_words(options[i])))
            return {static_cast<int>(i), true};

    // 2. a label tag "(b)" or bare letter token
    for (const auto& w : decoded_words) {
        if (w.size() == 3 && w.front() == '(' && w.back() == ')') {
            const int idx = w[1] - 'a';
            if (idx >= 0 && idx < static_cast<int>(options.size())) return {idx, true};
        }
    }
    // a bare letter counts only when it is the whole answer ("b"), otherwise
    // articles like "a" would shadow the real content
    if (decoded_words.size() == 1 && decoded_words[0].size() == 1) {
        const int idx = decoded_words[0][0] - 'a';
        if (idx >= 0 && idx < static_cast<int>(options.size())) return {idx, true};
    }

    // 3. highest token overlap, ties toward the lowest index
    int best = -1;
    std::size_t best_shared = 0;
    for (std::size_t i = 0; i < options.size(); ++i) {
        auto opt_words = Vocab::split_words(options[i]);
        std::size_t shared = 0;
        auto remaining = decoded_words;
        for (const auto& w : opt_words) {
            auto it = std::find(remaining.begin(), remaining.end(), w);
            if (it != remaining.end()) {
                ++shared;
                remaining.erase(it);
            }
        }
        if (shared > best_shared) {
            best_shared = shared;
            best = static_cast<int>(i);
        }
    }
    if (best >= 0) return {best, true};
    return {-1, false};
}

TwoStageResult run_two_stage(const StageModel& stage1, const StageModel& stage2,
                             const StageInput& base,
                             const std::optional<std::string>& oracle_rationale) {
    if (base.rationale.has_value())
        throw ContractError("run_two_stage: base input must not carry a rationale");

    TwoStageResult out;
    out.rationale =
        oracle_rationale ? *oracle_rationale : stage1.generate(base, Stage::rationale);

    StageInput second = base;
    second.rationale = out.rationale;
    out.answer_text = stage2.generate(second, Stage::answer);
    out.answer = match_answer(out.answer_text, base.options);
    return out;
}

}  // namespace mmlatent
