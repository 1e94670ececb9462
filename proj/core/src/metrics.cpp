#include "mmlatent/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::string lowered = text;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::istringstream ss(lowered);
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    // two-row dynamic program
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

}  // namespace

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    const auto cand = whitespace_tokens(candidate);
    const auto ref = whitespace_tokens(reference);
    if (cand.empty() && ref.empty()) return {0.0, 0.0, 0.0};
    if (cand.empty() || ref.empty()) return {0.0, 0.0, 0.0};
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    RougeScore s;
    s.precision = lcs / static_cast<double>(cand.size());
    s.recall = lcs / static_cast<double>(ref.size());
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& golds) {
    if (predictions.size() != golds.size())
        throw ContractError("accuracy: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(golds.size()) + " golds");
    if (predictions.empty()) throw ContractError("accuracy: empty inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        hits += predictions[i] == golds[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace mmlatent
